//! Active/reactive economic dispatch for a grid-connected PV-battery-diesel
//! microgrid that serves a lagging industrial load through scheduled grid
//! blackouts.
//!
//! The crate is organized bottom-up:
//! - [`pv_model`]: available PV power from irradiance and temperature
//! - [`components`]: battery, diesel generator and grid-tie limits
//! - [`dispatch`]: the single-step allocation subproblem and its cost
//! - [`optimizer`]: horizon dynamic programming, diesel-only baseline, oracle
//! - [`scenario`]: case-study configuration, profiles, reports and series
//! - [`cli`]: the `microgrid` command-line front end

pub mod cli;
pub mod components;
pub mod dispatch;
pub mod error;
pub mod feasibility;
pub mod optimizer;
pub mod pv_model;
pub mod scenario;

pub use components::{BatterySpec, BatteryState, BlackoutSchedule, DieselSpec, GridSpec};
pub use dispatch::{Plant, StepContext, StepCost, StepDecision, Weights};
pub use error::SpecError;
pub use feasibility::{Constraint, Feasibility, Tolerances, Violation};
pub use optimizer::{DispatchSchedule, HorizonProblem, OptimizeError, TerminalSoc};
pub use pv_model::{PvArraySpec, PvCellSpec, WeatherSample};
pub use scenario::{CostReport, Scenario, ScenarioConfig};
