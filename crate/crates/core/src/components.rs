//! Per-timestep device models: battery bank, diesel generator and grid tie.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{ensure, SpecError};
use crate::feasibility::{Constraint, Feasibility, Tolerances, SOC_TOL};

/// Fuel-curve slope, l/kWh.
pub const DIESEL_FUEL_COEFF_A: f64 = 0.246;
/// Fuel-curve no-load coefficient per kW of nominal power, l/kWh.
pub const DIESEL_FUEL_COEFF_B: f64 = 0.08415;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatterySpec {
    pub energy_capacity_kwh: f64,
    pub eta_charge: f64,
    pub eta_discharge: f64,
    pub depth_of_discharge: f64,
    pub inverter_rating_kva: f64,
    pub nominal_voltage_v: f64,
    pub nominal_capacity_ah: f64,
}

impl BatterySpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        ensure(self.energy_capacity_kwh > 0.0, "battery.energy_capacity_kwh", "must be > 0")?;
        let from_nameplate = self.nominal_voltage_v * self.nominal_capacity_ah / 1000.0;
        ensure(
            (from_nameplate - self.energy_capacity_kwh).abs() <= 1e-6 * self.energy_capacity_kwh,
            "battery.energy_capacity_kwh",
            "must equal nominal_voltage_v * nominal_capacity_ah / 1000",
        )?;
        ensure(
            self.eta_charge > 0.0 && self.eta_charge <= 1.0,
            "battery.eta_charge",
            "must lie in (0, 1]",
        )?;
        ensure(
            self.eta_discharge > 0.0 && self.eta_discharge <= 1.0,
            "battery.eta_discharge",
            "must lie in (0, 1]",
        )?;
        ensure(
            self.depth_of_discharge > 0.0 && self.depth_of_discharge <= 1.0,
            "battery.depth_of_discharge",
            "must lie in (0, 1]",
        )?;
        ensure(self.inverter_rating_kva >= 0.0, "battery.inverter_rating_kva", "must be >= 0")
    }

    pub fn soc_min(&self) -> f64 {
        1.0 - self.depth_of_discharge
    }
}

/// Normalized state of charge; 1.0 is a full battery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryState {
    pub soc: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BatteryError {
    #[error("battery cannot charge ({p_charge_kw} kW) and discharge ({p_discharge_kw} kW) in the same step")]
    ExclusivityViolation { p_charge_kw: f64, p_discharge_kw: f64 },
    #[error("state of charge {soc} outside [{soc_min}, 1]")]
    SocBoundsViolation { soc: f64, soc_min: f64 },
    #[error("invalid battery step: {0}")]
    InvalidStep(&'static str),
}

/// Advances the state of charge by one step of charging or discharging.
pub fn soc_step(
    state: BatteryState,
    p_charge_kw: f64,
    p_discharge_kw: f64,
    dt_hours: f64,
    spec: &BatterySpec,
) -> Result<BatteryState, BatteryError> {
    if dt_hours.is_nan() || dt_hours <= 0.0 {
        return Err(BatteryError::InvalidStep("dt_hours must be > 0"));
    }
    if p_charge_kw < 0.0 || p_discharge_kw < 0.0 {
        return Err(BatteryError::InvalidStep("battery powers must be >= 0"));
    }
    if p_charge_kw > 0.0 && p_discharge_kw > 0.0 {
        return Err(BatteryError::ExclusivityViolation {
            p_charge_kw,
            p_discharge_kw,
        });
    }
    let soc = soc_after(state.soc, p_charge_kw, p_discharge_kw, dt_hours, spec);
    let soc_min = spec.soc_min();
    if soc < soc_min - SOC_TOL || soc > 1.0 + SOC_TOL {
        return Err(BatteryError::SocBoundsViolation { soc, soc_min });
    }
    Ok(BatteryState { soc })
}

/// Unchecked SOC update shared by [`soc_step`] and schedule replay.
pub fn soc_after(soc: f64, p_charge_kw: f64, p_discharge_kw: f64, dt_hours: f64, spec: &BatterySpec) -> f64 {
    let e = spec.energy_capacity_kwh;
    soc + spec.eta_charge * p_charge_kw * dt_hours / e - p_discharge_kw * dt_hours / (spec.eta_discharge * e)
}

/// Returns `(soc_min, soc_max)` in the normalized convention.
pub fn soc_bounds(spec: &BatterySpec) -> (f64, f64) {
    (spec.soc_min(), 1.0)
}

pub fn battery_inverter_feasible(
    p_charge_kw: f64,
    p_discharge_kw: f64,
    q_kvar: f64,
    spec: &BatterySpec,
) -> Feasibility {
    battery_inverter_feasible_with(p_charge_kw, p_discharge_kw, q_kvar, spec, &Tolerances::STRICT)
}

pub fn battery_inverter_feasible_with(
    p_charge_kw: f64,
    p_discharge_kw: f64,
    q_kvar: f64,
    spec: &BatterySpec,
    tol: &Tolerances,
) -> Feasibility {
    let mut f = Feasibility::ok();
    if p_charge_kw < -tol.cone || p_discharge_kw < -tol.cone || q_kvar < -tol.cone {
        f.push(
            Constraint::NegativePower,
            -p_charge_kw.min(p_discharge_kw).min(q_kvar),
        );
    }
    let s1 = p_charge_kw > tol.cone;
    let s2 = p_discharge_kw > tol.cone;
    if s1 && s2 {
        f.push(
            Constraint::BatteryExclusivity,
            p_charge_kw.min(p_discharge_kw),
        );
    }
    let p_ch = if s1 { p_charge_kw } else { 0.0 };
    let p_dis = if s2 { p_discharge_kw } else { 0.0 };
    f.require_le(
        Constraint::BatteryChargeApparentPower,
        p_ch.hypot(q_kvar),
        spec.inverter_rating_kva,
        tol.cone,
    );
    f.require_le(
        Constraint::BatteryDischargeApparentPower,
        p_dis.hypot(q_kvar),
        spec.inverter_rating_kva,
        tol.cone,
    );
    f
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DieselSpec {
    pub rating_kva: f64,
    pub nominal_power_kw: f64,
    pub fuel_coeff_a: f64,
    pub fuel_coeff_b: f64,
    pub rated_pf: f64,
    pub min_load_fraction: f64,
}

impl DieselSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        ensure(self.rating_kva > 0.0, "diesel.rating_kva", "must be > 0")?;
        ensure(
            self.nominal_power_kw > 0.0 && self.nominal_power_kw <= self.rating_kva,
            "diesel.nominal_power_kw",
            "must lie in (0, rating_kva]",
        )?;
        ensure(
            self.fuel_coeff_a > 0.0 && self.fuel_coeff_b > 0.0,
            "diesel.fuel_coeff_*",
            "fuel coefficients must be > 0",
        )?;
        ensure(
            self.rated_pf > 0.0 && self.rated_pf <= 1.0,
            "diesel.rated_pf",
            "must lie in (0, 1]",
        )?;
        ensure(
            (0.0..1.0).contains(&self.min_load_fraction),
            "diesel.min_load_fraction",
            "must lie in [0, 1)",
        )
    }

    pub fn min_load_kw(&self) -> f64 {
        self.min_load_fraction * self.nominal_power_kw
    }

    /// Ratio q/p at the rated power factor.
    pub fn reactive_ratio(&self) -> f64 {
        self.rated_pf.acos().tan()
    }

    /// Largest reactive output compatible with both the apparent-power rating
    /// and the power-factor window at active output `p_kw`.
    pub fn max_reactive_kvar(&self, p_kw: f64) -> f64 {
        if p_kw <= 0.0 {
            return 0.0;
        }
        let cone = (self.rating_kva * self.rating_kva - p_kw * p_kw).max(0.0).sqrt();
        cone.min(p_kw * self.reactive_ratio())
    }
}

/// Fuel consumption in l/h.
pub fn diesel_fuel_rate(p_disp_kw: f64, spec: &DieselSpec) -> f64 {
    if p_disp_kw > 0.0 {
        spec.fuel_coeff_a * p_disp_kw + spec.fuel_coeff_b * spec.nominal_power_kw
    } else {
        0.0
    }
}

pub fn diesel_capability_feasible(p_kw: f64, q_kvar: f64, spec: &DieselSpec) -> Feasibility {
    diesel_capability_feasible_with(p_kw, q_kvar, spec, &Tolerances::STRICT, true)
}

/// Same as [`diesel_capability_feasible`]; `enforce_min_load = false` drops the
/// minimum-loading floor, as the diesel-only baseline does.
pub fn diesel_capability_feasible_with(
    p_kw: f64,
    q_kvar: f64,
    spec: &DieselSpec,
    tol: &Tolerances,
    enforce_min_load: bool,
) -> Feasibility {
    let mut f = Feasibility::ok();
    if p_kw < -tol.cone || q_kvar < -tol.cone {
        f.push(Constraint::NegativePower, -p_kw.min(q_kvar));
    }
    f.require_le(
        Constraint::DieselApparentPower,
        p_kw.hypot(q_kvar),
        spec.rating_kva,
        tol.cone,
    );
    let running = p_kw > tol.cone;
    if running {
        f.require_le(
            Constraint::DieselPowerFactor,
            q_kvar,
            p_kw * spec.reactive_ratio(),
            tol.cone,
        );
        if enforce_min_load {
            f.require_le(Constraint::DieselMinimumLoad, spec.min_load_kw(), p_kw, tol.cone);
        }
    } else if q_kvar > tol.cone {
        // no reactive output from a stopped machine
        f.push(Constraint::DieselPowerFactor, q_kvar);
    }
    f
}

/// Periodic ON/OFF grid availability with optional per-step overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlackoutSchedule {
    pub on_hours: f64,
    pub period_hours: f64,
    #[serde(default)]
    pub phase_offset_hours: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub explicit_overrides: BTreeMap<usize, bool>,
}

impl BlackoutSchedule {
    pub fn always_on() -> Self {
        Self {
            on_hours: 1.0,
            period_hours: 1.0,
            phase_offset_hours: 0.0,
            explicit_overrides: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        ensure(self.period_hours > 0.0, "grid.schedule.period_hours", "must be > 0")?;
        ensure(
            self.on_hours >= 0.0 && self.on_hours <= self.period_hours,
            "grid.schedule.on_hours",
            "must lie in [0, period_hours]",
        )?;
        ensure(
            self.phase_offset_hours >= 0.0 && self.phase_offset_hours < self.period_hours,
            "grid.schedule.phase_offset_hours",
            "must lie in [0, period_hours)",
        )
    }

    pub fn is_on(&self, step: usize, dt_hours: f64) -> bool {
        if let Some(&on) = self.explicit_overrides.get(&step) {
            return on;
        }
        let t = (step as f64 * dt_hours + self.phase_offset_hours).rem_euclid(self.period_hours);
        t < self.on_hours
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub rating_kva: f64,
    pub energy_price_per_kwh: f64,
    pub schedule: BlackoutSchedule,
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        ensure(self.rating_kva > 0.0, "grid.rating_kva", "must be > 0")?;
        ensure(
            self.energy_price_per_kwh >= 0.0,
            "grid.energy_price_per_kwh",
            "must be >= 0",
        )?;
        self.schedule.validate()
    }
}

/// Apparent power importable from the grid at `step`.
pub fn grid_available_kva(step: usize, dt_hours: f64, spec: &GridSpec) -> f64 {
    if spec.schedule.is_on(step, dt_hours) {
        spec.rating_kva
    } else {
        0.0
    }
}

pub fn grid_import_feasible(p_kw: f64, q_kvar: f64, available_kva: f64) -> Feasibility {
    grid_import_feasible_with(p_kw, q_kvar, available_kva, &Tolerances::STRICT)
}

pub fn grid_import_feasible_with(
    p_kw: f64,
    q_kvar: f64,
    available_kva: f64,
    tol: &Tolerances,
) -> Feasibility {
    let mut f = Feasibility::ok();
    if p_kw < -tol.cone || q_kvar < -tol.cone {
        f.push(Constraint::NegativePower, -p_kw.min(q_kvar));
    }
    f.require_le(
        Constraint::GridImportApparentPower,
        p_kw.hypot(q_kvar),
        available_kva,
        tol.cone,
    );
    f
}
