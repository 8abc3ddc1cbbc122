//! PV array output from the datasheet cell model.
//!
//! The fill factor is fixed at its STC value, so the cell's maximum power is
//! `Voc(T) * Isc(T, G) * FF` and reproduces the datasheet point at STC.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, SpecError};
use crate::feasibility::{Constraint, Feasibility, Tolerances};

const STC_TEMP_C: f64 = 25.0;
const STC_IRRADIANCE: f64 = 1000.0;

/// Datasheet parameters of a single PV cell at standard test conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PvCellSpec {
    pub v_oc_stc: f64,
    pub i_sc_stc: f64,
    pub p_max_stc: f64,
    /// Open-circuit voltage temperature coefficient, V/°C.
    pub k_v: f64,
    /// Short-circuit current temperature coefficient, A/°C.
    pub k_i: f64,
    /// Nominal operating cell temperature, °C. A value of 20 makes the cell
    /// temperature equal to ambient.
    pub noct: f64,
}

impl PvCellSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        ensure(self.v_oc_stc > 0.0, "pv.cell.v_oc_stc", "must be > 0")?;
        ensure(self.i_sc_stc > 0.0, "pv.cell.i_sc_stc", "must be > 0")?;
        ensure(
            self.p_max_stc > 0.0 && self.p_max_stc <= self.v_oc_stc * self.i_sc_stc,
            "pv.cell.p_max_stc",
            "must lie in (0, v_oc_stc * i_sc_stc]",
        )?;
        ensure(
            self.k_v.is_finite() && self.k_i.is_finite() && self.noct.is_finite(),
            "pv.cell",
            "temperature coefficients and noct must be finite",
        )
    }
}

/// PV array topology and inverter rating.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PvArraySpec {
    pub cell: PvCellSpec,
    pub n_series_panels: u32,
    pub n_parallel_panels: u32,
    pub n_cells_per_panel: u32,
    pub inverter_rating_kva: f64,
}

impl PvArraySpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        self.cell.validate()?;
        ensure(
            self.n_series_panels >= 1 && self.n_parallel_panels >= 1 && self.n_cells_per_panel >= 1,
            "pv.n_*",
            "panel and cell counts must be >= 1",
        )?;
        ensure(self.inverter_rating_kva >= 0.0, "pv.inverter_rating_kva", "must be >= 0")
    }

    pub fn cell_count(&self) -> u64 {
        u64::from(self.n_series_panels)
            * u64::from(self.n_parallel_panels)
            * u64::from(self.n_cells_per_panel)
    }

    /// Array DC power at STC, kW.
    pub fn stc_power_kw(&self) -> f64 {
        self.cell_count() as f64 * self.cell.p_max_stc / 1000.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeatherSample {
    pub irradiance_w_m2: f64,
    pub ambient_temp_c: f64,
}

/// Linear NOCT estimate of the cell temperature.
pub fn cell_temperature(w: WeatherSample, spec: &PvCellSpec) -> f64 {
    w.ambient_temp_c + (spec.noct - 20.0) / 800.0 * w.irradiance_w_m2
}

pub fn cell_open_circuit_voltage(t_cell: f64, spec: &PvCellSpec) -> f64 {
    (spec.v_oc_stc + spec.k_v * (t_cell - STC_TEMP_C)).max(0.0)
}

pub fn cell_short_circuit_current(t_cell: f64, w: WeatherSample, spec: &PvCellSpec) -> f64 {
    let i = (spec.i_sc_stc + spec.k_i * (t_cell - STC_TEMP_C)) * w.irradiance_w_m2 / STC_IRRADIANCE;
    i.max(0.0)
}

pub fn cell_fill_factor(spec: &PvCellSpec) -> Result<f64, SpecError> {
    let denom = spec.v_oc_stc * spec.i_sc_stc;
    if denom == 0.0 || !denom.is_finite() {
        return Err(SpecError::new(
            "pv.cell",
            "v_oc_stc * i_sc_stc must be non-zero for the fill factor",
        ));
    }
    Ok(spec.p_max_stc / denom)
}

/// Maximum cell power in watts for the given weather.
pub fn cell_max_power(w: WeatherSample, spec: &PvCellSpec) -> f64 {
    let Ok(ff) = cell_fill_factor(spec) else {
        return 0.0;
    };
    let t = cell_temperature(w, spec);
    cell_open_circuit_voltage(t, spec) * cell_short_circuit_current(t, w, spec) * ff
}

/// Total available array power in kW.
pub fn array_available_power(w: WeatherSample, array: &PvArraySpec) -> f64 {
    array.cell_count() as f64 * cell_max_power(w, &array.cell) / 1000.0
}

/// Checks a PV dispatch against the available power and the inverter rating.
pub fn pv_dispatch_feasible(
    p_kw: f64,
    q_kvar: f64,
    p_available_kw: f64,
    array: &PvArraySpec,
) -> Feasibility {
    pv_dispatch_feasible_with(p_kw, q_kvar, p_available_kw, array, &Tolerances::STRICT)
}

pub fn pv_dispatch_feasible_with(
    p_kw: f64,
    q_kvar: f64,
    p_available_kw: f64,
    array: &PvArraySpec,
    tol: &Tolerances,
) -> Feasibility {
    let mut f = Feasibility::ok();
    if p_kw < -tol.cone || q_kvar < -tol.cone {
        f.push(Constraint::NegativePower, -p_kw.min(q_kvar));
    }
    f.require_le(Constraint::PvAvailability, p_kw, p_available_kw, tol.cone);
    f.require_le(
        Constraint::PvInverterApparentPower,
        p_kw.hypot(q_kvar),
        array.inverter_rating_kva,
        tol.cone,
    );
    f
}
