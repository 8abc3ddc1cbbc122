//! Case-study assembly: configuration, input profiles, reports and per-step
//! series output.

mod profile;
mod report;
mod series;
pub mod synthetic;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::components::{
    grid_available_kva, BatterySpec, BlackoutSchedule, DieselSpec, GridSpec, DIESEL_FUEL_COEFF_A,
    DIESEL_FUEL_COEFF_B,
};
use crate::dispatch::{load_reactive_from_pf, Plant, StepContext, Weights};
use crate::error::{ensure, SpecError};
use crate::optimizer::{HorizonProblem, TerminalSoc};
use crate::pv_model::{array_available_power, PvArraySpec, PvCellSpec, WeatherSample};

pub use profile::{load_profile, parse_profile, write_profile, Profile, ProfileError, ProfileKind};
pub use report::{render_comparison, render_report, summarize, Comparison, CostReport};
pub use series::{emit_series, read_series, write_series, SeriesError, SeriesRow, SERIES_COLUMNS};

/// Everything needed to build a horizon problem except the time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub pv: PvArraySpec,
    pub battery: BatterySpec,
    pub diesel: DieselSpec,
    pub grid: GridSpec,
    pub load_pf: f64,
    pub weights: Weights,
    pub fuel_price: f64,
    pub horizon_steps: usize,
    pub dt_hours: f64,
    pub initial_soc: f64,
    pub soc_levels: usize,
    #[serde(default)]
    pub terminal_soc: TerminalSoc,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SpecError> {
        self.plant().validate()?;
        self.weights.validate()?;
        ensure(
            self.load_pf > 0.0 && self.load_pf <= 1.0,
            "load_pf",
            "must lie in (0, 1]",
        )?;
        ensure(self.fuel_price >= 0.0, "fuel_price", "must be >= 0")?;
        ensure(self.horizon_steps >= 1, "horizon_steps", "must be >= 1")?;
        ensure(self.dt_hours > 0.0, "dt_hours", "must be > 0")?;
        ensure(self.soc_levels >= 2, "soc_levels", "must be >= 2")?;
        ensure(
            self.initial_soc >= self.battery.soc_min() - 1e-9 && self.initial_soc <= 1.0 + 1e-9,
            "initial_soc",
            "must lie in [1 - depth_of_discharge, 1]",
        )
    }

    pub fn plant(&self) -> Plant {
        Plant {
            pv: self.pv,
            battery: self.battery,
            diesel: self.diesel,
            grid: self.grid.clone(),
        }
    }
}

/// The reference case study: component sizes and prices on a two-day hourly horizon.
pub fn default_case_study() -> ScenarioConfig {
    ScenarioConfig {
        // 20 x 100 panels of 70 cells at 5 W = 700 kWp
        pv: PvArraySpec {
            cell: PvCellSpec {
                v_oc_stc: 0.70,
                i_sc_stc: 9.6,
                p_max_stc: 5.0,
                k_v: -0.0022,
                k_i: 0.0045,
                noct: 45.0,
            },
            n_series_panels: 20,
            n_parallel_panels: 100,
            n_cells_per_panel: 70,
            inverter_rating_kva: 700.0,
        },
        battery: BatterySpec {
            energy_capacity_kwh: 960.0,
            eta_charge: 0.95,
            eta_discharge: 0.95,
            depth_of_discharge: 0.8,
            inverter_rating_kva: 500.0,
            nominal_voltage_v: 480.0,
            nominal_capacity_ah: 2000.0,
        },
        diesel: DieselSpec {
            rating_kva: 500.0,
            nominal_power_kw: 500.0,
            fuel_coeff_a: DIESEL_FUEL_COEFF_A,
            fuel_coeff_b: DIESEL_FUEL_COEFF_B,
            rated_pf: 0.8,
            min_load_fraction: 0.3,
        },
        grid: GridSpec {
            rating_kva: 500.0,
            energy_price_per_kwh: 0.15,
            schedule: BlackoutSchedule {
                on_hours: 8.0,
                period_hours: 16.0,
                phase_offset_hours: 0.0,
                explicit_overrides: Default::default(),
            },
        },
        load_pf: 0.85,
        weights: Weights::default(),
        fuel_price: 1.5,
        horizon_steps: 48,
        dt_hours: 1.0,
        initial_soc: 0.6,
        soc_levels: 101,
        terminal_soc: TerminalSoc::Free,
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("{path}: {message}")]
    Config { path: String, message: String },
    #[error("{kind:?} profile has {len} steps, horizon needs {needed}")]
    ProfileLength {
        kind: ProfileKind,
        len: usize,
        needed: usize,
    },
}

/// A validated configuration together with its input series.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub plant: Plant,
    pub load: Profile,
    pub irradiance: Profile,
    pub temperature: Profile,
}

impl Scenario {
    pub fn new(
        config: ScenarioConfig,
        load: Profile,
        irradiance: Profile,
        temperature: Profile,
    ) -> Result<Self, ScenarioError> {
        config.validate()?;
        for p in [&load, &irradiance, &temperature] {
            if p.values.len() < config.horizon_steps {
                return Err(ScenarioError::ProfileLength {
                    kind: p.kind,
                    len: p.values.len(),
                    needed: config.horizon_steps,
                });
            }
        }
        let plant = config.plant();
        Ok(Self {
            config,
            plant,
            load,
            irradiance,
            temperature,
        })
    }

    /// Reads the three profile files from `dir`.
    pub fn from_profiles_dir(config: ScenarioConfig, dir: &Path) -> Result<Self, ScenarioError> {
        let dt = config.dt_hours;
        let read = |kind: ProfileKind| load_profile(&dir.join(kind.file_name()), kind, dt);
        let load = read(ProfileKind::LoadKw)?;
        let irradiance = read(ProfileKind::IrradianceWm2)?;
        let temperature = read(ProfileKind::AmbientTempC)?;
        Self::new(config, load, irradiance, temperature)
    }

    pub fn contexts(&self) -> Vec<StepContext<'_>> {
        let cfg = &self.config;
        (0..cfg.horizon_steps)
            .map(|step| {
                let load_p = self.load.values[step];
                let weather = WeatherSample {
                    irradiance_w_m2: self.irradiance.values[step],
                    ambient_temp_c: self.temperature.values[step],
                };
                StepContext {
                    step,
                    dt_hours: cfg.dt_hours,
                    load_p_kw: load_p,
                    load_q_kvar: load_reactive_from_pf(load_p, cfg.load_pf)
                        .expect("load_pf validated"),
                    pv_available_kw: array_available_power(weather, &self.plant.pv),
                    grid_available_kva: grid_available_kva(step, cfg.dt_hours, &self.plant.grid),
                    plant: &self.plant,
                    weights: cfg.weights,
                    fuel_price: cfg.fuel_price,
                }
            })
            .collect()
    }

    pub fn problem(&self) -> HorizonProblem<'_> {
        HorizonProblem {
            contexts: self.contexts(),
            initial_soc: self.config.initial_soc,
            terminal_soc: self.config.terminal_soc,
            soc_levels: self.config.soc_levels,
        }
    }
}

pub fn read_config(path: &Path) -> Result<ScenarioConfig, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Config {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config(&text, &path.display().to_string())
}

pub fn parse_config(text: &str, origin: &str) -> Result<ScenarioConfig, ScenarioError> {
    let config: ScenarioConfig = serde_json::from_str(text).map_err(|e| ScenarioError::Config {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

pub fn config_to_json(config: &ScenarioConfig) -> String {
    let mut s = serde_json::to_string_pretty(config).expect("config serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_case_study_sizes() {
        let cfg = default_case_study();
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.battery.energy_capacity_kwh, 960.0);
        assert_eq!(cfg.battery.inverter_rating_kva, 500.0);
        assert_eq!(cfg.pv.inverter_rating_kva, 700.0);
        assert!((cfg.pv.stc_power_kw() - 700.0).abs() < 1e-9);
        assert_eq!(cfg.diesel.rating_kva, 500.0);
        assert_eq!(cfg.grid.rating_kva, 500.0);
        assert_eq!(cfg.horizon_steps, 48);
        assert_eq!(grid_available_kva(9, 1.0, &cfg.grid), 0.0);
        assert_eq!(grid_available_kva(7, 1.0, &cfg.grid), 500.0);
    }

    #[test]
    fn config_json_round_trips_and_rejects_unknown_keys() {
        let cfg = default_case_study();
        let text = config_to_json(&cfg);
        assert_eq!(parse_config(&text, "cfg").unwrap(), cfg);
        let with_extra = text.replacen('{', "{\n  \"colour\": 3,", 1);
        assert!(matches!(parse_config(&with_extra, "cfg"), Err(ScenarioError::Config { .. })));
        let nested_extra = text.replacen("\"eta_charge\"", "\"eta_chrge\": 1.0, \"eta_charge\"", 1);
        assert!(parse_config(&nested_extra, "cfg").is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        let mut cfg = default_case_study();
        cfg.load_pf = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = default_case_study();
        cfg.initial_soc = 0.1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn short_profiles_are_rejected() {
        let cfg = default_case_study();
        let p = |kind| Profile {
            values: vec![1.0; 10],
            dt_hours: 1.0,
            kind,
        };
        assert!(matches!(
            Scenario::new(cfg, p(ProfileKind::LoadKw), p(ProfileKind::IrradianceWm2), p(ProfileKind::AmbientTempC)),
            Err(ScenarioError::ProfileLength { .. })
        ));
    }
}
