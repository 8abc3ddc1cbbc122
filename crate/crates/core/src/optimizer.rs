//! Horizon optimization over a discretized state-of-charge grid.
//!
//! The state of charge is the only quantity linking consecutive steps, so the
//! horizon problem is a shortest path through `soc_levels` states per step.
//! Each transition's cost comes from [`solve_step_with_cost`] with the battery
//! power implied by the SOC change.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::components::{soc_after, BatterySpec};
use crate::dispatch::{
    check_decision, solve_step_with_cost, step_cost, StepContext, StepCost, StepDecision, Weights,
};
use crate::feasibility::{Constraint, Tolerances, Violation};

/// Largest number of SOC paths the exhaustive oracle will enumerate.
pub const ORACLE_PATH_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalSoc {
    #[default]
    Free,
    AtLeast(f64),
}

#[derive(Debug, Clone)]
pub struct HorizonProblem<'a> {
    pub contexts: Vec<StepContext<'a>>,
    pub initial_soc: f64,
    pub terminal_soc: TerminalSoc,
    pub soc_levels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispatchSchedule {
    pub decisions: Vec<StepDecision>,
    pub soc_trajectory: Vec<f64>,
    pub step_costs: Vec<StepCost>,
    /// Weighted objective summed over the horizon.
    pub total_objective: f64,
    /// Grid plus fuel cost, independent of the weights.
    pub monetary_cost: f64,
    /// Estimated gap to the continuous-SOC optimum caused by the grid spacing.
    pub discretization_bound: f64,
    pub infeasible_steps: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error("no feasible schedule; earliest infeasible step {step}")]
    NoFeasibleSchedule { step: usize },
    #[error("instance too large for exhaustive enumeration ({levels}^{horizon} paths)")]
    InstanceTooLarge { levels: usize, horizon: usize },
    #[error("invalid horizon problem: {0}")]
    InvalidProblem(String),
    #[error("baseline cost is zero; improvement undefined")]
    DivisionByZero,
}

/// Uniform SOC levels over `[soc_min, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocGrid {
    pub soc_min: f64,
    pub levels: usize,
}

impl SocGrid {
    pub fn new(battery: &BatterySpec, levels: usize) -> Self {
        Self {
            soc_min: battery.soc_min(),
            levels,
        }
    }

    /// Level value; nested grids (2^n + 1 levels) share bit-identical values.
    pub fn level(&self, i: usize) -> f64 {
        if i + 1 == self.levels {
            return 1.0;
        }
        let frac = i as f64 / (self.levels - 1) as f64;
        self.soc_min + (1.0 - self.soc_min) * frac
    }

    pub fn spacing(&self) -> f64 {
        (1.0 - self.soc_min) / (self.levels - 1) as f64
    }

    pub fn nearest(&self, soc: f64) -> usize {
        let span = 1.0 - self.soc_min;
        if span <= 0.0 {
            return self.levels - 1;
        }
        let x = ((soc - self.soc_min) / span * (self.levels - 1) as f64).round();
        x.clamp(0.0, (self.levels - 1) as f64) as usize
    }
}

/// Signed battery power (positive = discharge) that moves the SOC from
/// `from` to `to` over `dt_hours`.
pub fn implied_battery_power(from: f64, to: f64, dt_hours: f64, battery: &BatterySpec) -> f64 {
    let delta = to - from;
    let e = battery.energy_capacity_kwh;
    if delta > 0.0 {
        -(delta * e / (battery.eta_charge * dt_hours))
    } else if delta < 0.0 {
        -delta * e * battery.eta_discharge / dt_hours
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Serial,
    Parallel,
}

struct Prepared<'p, 'a> {
    problem: &'p HorizonProblem<'a>,
    grid: SocGrid,
    initial: usize,
}

impl<'p, 'a> Prepared<'p, 'a> {
    fn new(problem: &'p HorizonProblem<'a>) -> Result<Self, OptimizeError> {
        let first = problem
            .contexts
            .first()
            .ok_or_else(|| OptimizeError::InvalidProblem("horizon must have at least one step".into()))?;
        if problem.soc_levels < 2 {
            return Err(OptimizeError::InvalidProblem("soc_levels must be >= 2".into()));
        }
        let battery = &first.plant.battery;
        let grid = SocGrid::new(battery, problem.soc_levels);
        let soc0 = problem.initial_soc;
        if !(soc0 >= grid.soc_min - 1e-9 && soc0 <= 1.0 + 1e-9) {
            return Err(OptimizeError::InvalidProblem(format!(
                "initial_soc {soc0} outside [{}, 1]",
                grid.soc_min
            )));
        }
        let initial = grid.nearest(soc0);
        if (grid.level(initial) - soc0).abs() > 1e-12 {
            log::warn!(
                "initial SOC {soc0} snapped to grid level {}",
                grid.level(initial)
            );
        }
        Ok(Self {
            problem,
            grid,
            initial,
        })
    }

    fn horizon(&self) -> usize {
        self.problem.contexts.len()
    }

    fn battery(&self) -> &BatterySpec {
        &self.problem.contexts[0].plant.battery
    }

    fn terminal_ok(&self, j: usize) -> bool {
        match self.problem.terminal_soc {
            TerminalSoc::Free => true,
            TerminalSoc::AtLeast(v) => self.grid.level(j) >= v - 1e-9,
        }
    }

    fn stage(&self, k: usize, i: usize, j: usize) -> Option<(StepDecision, StepCost)> {
        let ctx = &self.problem.contexts[k];
        let p = implied_battery_power(
            self.grid.level(i),
            self.grid.level(j),
            ctx.dt_hours,
            &ctx.plant.battery,
        );
        if p.abs() > ctx.plant.battery.inverter_rating_kva {
            return None;
        }
        solve_step_with_cost(ctx, p).ok()
    }

    /// Latest step at which every reachable state runs out of feasible moves.
    fn earliest_infeasible_step(&self) -> usize {
        let n = self.grid.levels;
        let h = self.horizon();
        let mut reach = vec![false; n];
        reach[self.initial] = true;
        for k in 0..h {
            let mut next = vec![false; n];
            for i in (0..n).filter(|&i| reach[i]) {
                for (j, slot) in next.iter_mut().enumerate() {
                    if !*slot && self.stage(k, i, j).is_some() {
                        *slot = true;
                    }
                }
            }
            if !next.iter().any(|&r| r) {
                return k;
            }
            reach = next;
        }
        h - 1
    }

    fn discretization_bound(&self) -> f64 {
        let ctx = &self.problem.contexts[0];
        let Weights { w1, w2 } = ctx.weights;
        let marginal = [
            w2,
            w1 * ctx.plant.grid.energy_price_per_kwh,
            w1 * ctx.fuel_price * ctx.plant.diesel.fuel_coeff_a,
        ]
        .into_iter()
        .fold(0.0f64, f64::max);
        let b = self.battery();
        marginal * self.grid.spacing() * b.energy_capacity_kwh / b.eta_charge * self.horizon() as f64
    }

    fn schedule(&self, path: &[usize], stages: Vec<(StepDecision, StepCost)>, total: f64) -> DispatchSchedule {
        let mut soc_trajectory = Vec::with_capacity(path.len() + 1);
        soc_trajectory.push(self.grid.level(self.initial));
        soc_trajectory.extend(path.iter().map(|&j| self.grid.level(j)));
        let monetary_cost = stages.iter().map(|(_, c)| c.monetary()).sum();
        let (decisions, step_costs) = stages.into_iter().unzip();
        DispatchSchedule {
            decisions,
            soc_trajectory,
            step_costs,
            total_objective: total,
            monetary_cost,
            discretization_bound: self.discretization_bound(),
            infeasible_steps: Vec::new(),
        }
    }
}

/// Best target level from one state, with its stage solution.
type Choice = Option<(usize, StepDecision, StepCost)>;

pub fn optimize(problem: &HorizonProblem<'_>) -> Result<DispatchSchedule, OptimizeError> {
    optimize_with(problem, Execution::Parallel)
}

/// Backward induction over the SOC grid, then a forward pass along the policy.
/// Ties go to the smallest target level.
pub fn optimize_with(
    problem: &HorizonProblem<'_>,
    execution: Execution,
) -> Result<DispatchSchedule, OptimizeError> {
    let prep = Prepared::new(problem)?;
    let n = prep.grid.levels;
    let h = prep.horizon();

    let mut value: Vec<f64> = (0..n)
        .map(|j| if prep.terminal_ok(j) { 0.0 } else { f64::INFINITY })
        .collect();
    let mut policy: Vec<Vec<Choice>> = vec![Vec::new(); h];

    for k in (0..h).rev() {
        let best_from = |i: usize| {
            let mut best = f64::INFINITY;
            let mut choice = None;
            for (j, &next) in value.iter().enumerate() {
                if next == f64::INFINITY {
                    continue;
                }
                if let Some((d, c)) = prep.stage(k, i, j) {
                    let v = c.objective + next;
                    if v < best {
                        best = v;
                        choice = Some((j, d, c));
                    }
                }
            }
            (best, choice)
        };
        let row: Vec<(f64, Choice)> = match execution {
            Execution::Serial => (0..n).map(best_from).collect(),
            Execution::Parallel => (0..n).into_par_iter().map(best_from).collect(),
        };
        let (v, p): (Vec<_>, Vec<_>) = row.into_iter().unzip();
        value = v;
        policy[k] = p;
    }

    let total = value[prep.initial];
    if total == f64::INFINITY {
        return Err(OptimizeError::NoFeasibleSchedule {
            step: prep.earliest_infeasible_step(),
        });
    }

    let mut i = prep.initial;
    let mut path = Vec::with_capacity(h);
    let mut stages = Vec::with_capacity(h);
    for row in &policy {
        let (j, d, c) = row[i].expect("finite value has a policy entry");
        path.push(j);
        stages.push((d, c));
        i = j;
    }
    Ok(prep.schedule(&path, stages, total))
}

/// Exhaustive enumeration of every SOC path, for cross-checking [`optimize`].
///
/// Paths are ranked by `(cost-to-go, level)` compared stage by stage from the
/// first step, which is the order backward induction resolves ties in; costs
/// are summed from the last step forward, as the recursion does.
pub fn brute_force_oracle(problem: &HorizonProblem<'_>) -> Result<DispatchSchedule, OptimizeError> {
    let prep = Prepared::new(problem)?;
    let n = prep.grid.levels;
    let h = prep.horizon();
    let too_large = OptimizeError::InstanceTooLarge {
        levels: n,
        horizon: h,
    };
    let paths = u32::try_from(h)
        .ok()
        .and_then(|e| (n as u64).checked_pow(e))
        .ok_or(too_large.clone())?;
    if paths > ORACLE_PATH_LIMIT {
        return Err(too_large);
    }

    // stage results memoized per (step, from, to)
    let table: Vec<Vec<Option<(StepDecision, StepCost)>>> = (0..h)
        .map(|k| {
            (0..n * n)
                .map(|ij| prep.stage(k, ij / n, ij % n))
                .collect()
        })
        .collect();

    let mut path = vec![0usize; h];
    let mut best: Option<(Vec<f64>, Vec<usize>)> = None;
    let mut deepest_failure = 0usize;
    loop {
        let mut first_failure = None;
        for k in 0..h {
            let from = if k == 0 { prep.initial } else { path[k - 1] };
            if table[k][from * n + path[k]].is_none() {
                first_failure = Some(k);
                break;
            }
        }
        let failure = match first_failure {
            Some(k) => Some(k),
            None if !prep.terminal_ok(path[h - 1]) => Some(h - 1),
            None => None,
        };
        match failure {
            Some(k) => deepest_failure = deepest_failure.max(k),
            None => {
                let mut suffix = vec![0.0; h];
                let mut acc = 0.0;
                for k in (0..h).rev() {
                    let from = if k == 0 { prep.initial } else { path[k - 1] };
                    let (_, c) = table[k][from * n + path[k]].expect("checked feasible");
                    acc += c.objective;
                    suffix[k] = acc;
                }
                let better = best.as_ref().is_none_or(|(b, bp)| {
                    (0..h)
                        .map(|k| suffix[k].total_cmp(&b[k]).then(path[k].cmp(&bp[k])))
                        .find(|o| o.is_ne())
                        .is_some_and(|o| o.is_lt())
                });
                if better {
                    best = Some((suffix, path.clone()));
                }
            }
        }

        // advance the odometer, last step fastest
        let mut pos = h;
        let exhausted = loop {
            if pos == 0 {
                break true;
            }
            pos -= 1;
            path[pos] += 1;
            if path[pos] < n {
                break false;
            }
            path[pos] = 0;
        };
        if exhausted {
            break;
        }
    }

    let Some((suffix, best_path)) = best else {
        return Err(OptimizeError::NoFeasibleSchedule {
            step: deepest_failure,
        });
    };
    let stages = (0..h)
        .map(|k| {
            let from = if k == 0 { prep.initial } else { best_path[k - 1] };
            table[k][from * n + best_path[k]].expect("feasible path")
        })
        .collect();
    Ok(prep.schedule(&best_path, stages, suffix[0]))
}

/// Grid serves the whole load while available, the diesel generator during
/// blackouts. PV and battery stay idle (at the snapped initial SOC) and the
/// generator's minimum loading is not enforced.
pub fn diesel_only_baseline(problem: &HorizonProblem<'_>) -> Result<DispatchSchedule, OptimizeError> {
    if problem.contexts.is_empty() {
        return Err(OptimizeError::InvalidProblem(
            "horizon must have at least one step".into(),
        ));
    }
    let mut decisions = Vec::with_capacity(problem.contexts.len());
    let mut step_costs = Vec::with_capacity(problem.contexts.len());
    for ctx in &problem.contexts {
        let mut d = StepDecision::default();
        if ctx.grid_available_kva > 0.0 {
            d.p_grid_kw = ctx.load_p_kw;
            d.q_grid_kvar = ctx.load_q_kvar;
        } else {
            d.p_dg_kw = ctx.load_p_kw;
            d.q_dg_kvar = ctx.load_q_kvar;
        }
        if !check_decision(&d, ctx, &Tolerances::STRICT, false).is_feasible() {
            return Err(OptimizeError::NoFeasibleSchedule { step: ctx.step });
        }
        step_costs.push(step_cost(&d, &ctx.with_weights(Weights::MONETARY)));
        decisions.push(d);
    }
    let monetary_cost: f64 = step_costs.iter().map(StepCost::monetary).sum();
    let battery = &problem.contexts[0].plant.battery;
    let soc0 = if problem.soc_levels >= 2 {
        let grid = SocGrid::new(battery, problem.soc_levels);
        grid.level(grid.nearest(problem.initial_soc))
    } else {
        problem.initial_soc
    };
    Ok(DispatchSchedule {
        soc_trajectory: vec![soc0; decisions.len() + 1],
        decisions,
        step_costs,
        total_objective: monetary_cost,
        monetary_cost,
        discretization_bound: 0.0,
        infeasible_steps: Vec::new(),
    })
}

/// Weighted objective of an arbitrary decision sequence.
pub fn evaluate_objective(decisions: &[StepDecision], contexts: &[StepContext<'_>]) -> f64 {
    decisions
        .iter()
        .zip(contexts)
        .map(|(d, ctx)| step_cost(d, ctx).objective)
        .sum()
}

/// Percentage monetary saving of `opt` relative to `base`.
pub fn improvement_vs_baseline(
    opt: &DispatchSchedule,
    base: &DispatchSchedule,
) -> Result<f64, OptimizeError> {
    improvement_pct(base.monetary_cost, opt.monetary_cost)
}

pub fn improvement_pct(base_cost: f64, opt_cost: f64) -> Result<f64, OptimizeError> {
    if base_cost == 0.0 {
        return Err(OptimizeError::DivisionByZero);
    }
    Ok(100.0 * (base_cost - opt_cost) / base_cost)
}

/// First violated per-step constraint of a schedule, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct StepViolation {
    pub step: usize,
    pub violation: Violation,
}

/// Replays a schedule through every device predicate, the power balance and
/// the SOC dynamics.
pub fn verify_schedule(
    schedule: &DispatchSchedule,
    contexts: &[StepContext<'_>],
    tol: &Tolerances,
    enforce_min_load: bool,
) -> Result<(), StepViolation> {
    for (k, (d, ctx)) in schedule.decisions.iter().zip(contexts).enumerate() {
        let f = check_decision(d, ctx, tol, enforce_min_load);
        if let Some(&violation) = f.first() {
            return Err(StepViolation { step: k, violation });
        }
        let battery = &ctx.plant.battery;
        let (soc, next) = (schedule.soc_trajectory[k], schedule.soc_trajectory[k + 1]);
        let soc_min = battery.soc_min();
        for s in [soc, next] {
            let excess = (soc_min - s).max(s - 1.0);
            if excess > tol.soc {
                return Err(StepViolation {
                    step: k,
                    violation: Violation {
                        constraint: Constraint::SocBounds,
                        excess,
                    },
                });
            }
        }
        let expected = soc_after(soc, d.p_charge_kw, d.p_discharge_kw, ctx.dt_hours, battery);
        let drift = (expected - next).abs();
        if drift > tol.soc {
            return Err(StepViolation {
                step: k,
                violation: Violation {
                    constraint: Constraint::SocDynamics,
                    excess: drift,
                },
            });
        }
    }
    Ok(())
}
