//! Constraint-check diagnostics shared by every per-device predicate.

use std::fmt;

/// Tolerance applied to apparent-power (cone) and availability limits, in kW/kVA.
pub const CONE_TOL: f64 = 1e-9;

/// Tolerance applied to the active and reactive power balance, in kW/kvar.
pub const BALANCE_TOL: f64 = 1e-6;

/// Tolerance on state-of-charge bounds and dynamics, as a fraction.
pub const SOC_TOL: f64 = 1e-9;

/// Tolerance set used by the feasibility predicates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub cone: f64,
    pub balance: f64,
    pub soc: f64,
}

impl Tolerances {
    /// Tolerances for in-memory schedules.
    pub const STRICT: Tolerances = Tolerances {
        cone: CONE_TOL,
        balance: BALANCE_TOL,
        soc: SOC_TOL,
    };

    /// Tolerances for schedules read back from series files, whose values are
    /// rounded to six decimals. Each of the nine balance terms may carry up to
    /// 5e-7 of rounding error.
    pub const SERIES_FILE: Tolerances = Tolerances {
        cone: 1e-5,
        balance: 1e-5,
        soc: 1e-5,
    };
}

/// Identifies a single physical or operational limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constraint {
    NegativePower,
    PvAvailability,
    PvInverterApparentPower,
    BatteryExclusivity,
    BatteryChargeApparentPower,
    BatteryDischargeApparentPower,
    SocBounds,
    SocDynamics,
    DieselApparentPower,
    DieselPowerFactor,
    DieselMinimumLoad,
    GridImportApparentPower,
    ActiveBalance,
    ReactiveBalance,
    ContextMismatch,
}

impl Constraint {
    pub fn describe(self) -> &'static str {
        match self {
            Constraint::NegativePower => "non-negative power injection",
            Constraint::PvAvailability => "PV dispatch within available PV power",
            Constraint::PvInverterApparentPower => "PV inverter apparent-power rating",
            Constraint::BatteryExclusivity => "battery charge/discharge exclusivity",
            Constraint::BatteryChargeApparentPower => {
                "battery inverter apparent-power rating while charging"
            }
            Constraint::BatteryDischargeApparentPower => {
                "battery inverter apparent-power rating while discharging"
            }
            Constraint::SocBounds => "battery state-of-charge bounds",
            Constraint::SocDynamics => "battery state-of-charge dynamics",
            Constraint::DieselApparentPower => "diesel generator apparent-power rating",
            Constraint::DieselPowerFactor => "diesel generator power-factor window",
            Constraint::DieselMinimumLoad => "diesel generator minimum loading",
            Constraint::GridImportApparentPower => "grid import apparent-power limit",
            Constraint::ActiveBalance => "active power balance",
            Constraint::ReactiveBalance => "reactive power balance",
            Constraint::ContextMismatch => "series context matches scenario",
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.describe())
    }
}

/// A violated constraint and the amount by which it was exceeded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub constraint: Constraint,
    pub excess: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violated by {:.9}", self.constraint, self.excess)
    }
}

/// Outcome of a feasibility predicate: empty means feasible.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Feasibility {
    violations: Vec<Violation>,
}

impl Feasibility {
    pub fn ok() -> Self {
        Self::default()
    }

    /// Records a violation when `value` exceeds `limit` by more than `tol`.
    pub(crate) fn require_le(&mut self, constraint: Constraint, value: f64, limit: f64, tol: f64) {
        let excess = value - limit;
        if excess > tol || !value.is_finite() {
            self.violations.push(Violation { constraint, excess });
        }
    }

    pub(crate) fn push(&mut self, constraint: Constraint, excess: f64) {
        self.violations.push(Violation { constraint, excess });
    }

    pub fn merge(&mut self, other: Feasibility) {
        self.violations.extend(other.violations);
    }

    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn first(&self) -> Option<&Violation> {
        self.violations.first()
    }

    pub fn violates(&self, constraint: Constraint) -> bool {
        self.violations.iter().any(|v| v.constraint == constraint)
    }
}
