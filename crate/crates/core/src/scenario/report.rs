use std::fmt::Write as _;

use serde::Serialize;

use crate::dispatch::{step_cost, StepContext, Weights};
use crate::optimizer::{improvement_pct, DispatchSchedule};

/// Energy and money tallies of one schedule over the horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport {
    pub e_load_kwh: f64,
    pub e_grid_kwh: f64,
    pub e_dg_kwh: f64,
    pub e_pv_dispatched_kwh: f64,
    pub e_pv_available_kwh: f64,
    pub e_pv_curtailed_kwh: f64,
    pub e_charge_kwh: f64,
    pub e_discharge_kwh: f64,
    pub dg_running_hours: f64,
    pub grid_cost: f64,
    pub fuel_cost: f64,
    pub total_cost: f64,
    pub fuel_liters: f64,
    /// Monetary saving against the diesel-only baseline, percent.
    pub improvement_pct: Option<f64>,
}

/// Tallies `schedule` and compares its monetary cost to `baseline` when given.
pub fn summarize(
    schedule: &DispatchSchedule,
    baseline: Option<&DispatchSchedule>,
    contexts: &[StepContext<'_>],
) -> CostReport {
    let mut r = CostReport {
        e_load_kwh: 0.0,
        e_grid_kwh: 0.0,
        e_dg_kwh: 0.0,
        e_pv_dispatched_kwh: 0.0,
        e_pv_available_kwh: 0.0,
        e_pv_curtailed_kwh: 0.0,
        e_charge_kwh: 0.0,
        e_discharge_kwh: 0.0,
        dg_running_hours: 0.0,
        grid_cost: 0.0,
        fuel_cost: 0.0,
        total_cost: 0.0,
        fuel_liters: 0.0,
        improvement_pct: None,
    };
    for (d, ctx) in schedule.decisions.iter().zip(contexts) {
        let dt = ctx.dt_hours;
        let cost = step_cost(d, &ctx.with_weights(Weights::MONETARY));
        r.e_load_kwh += ctx.load_p_kw * dt;
        r.e_grid_kwh += d.p_grid_kw * dt;
        r.e_dg_kwh += d.p_dg_kw * dt;
        r.e_pv_dispatched_kwh += d.p_pv_kw * dt;
        r.e_pv_available_kwh += ctx.pv_available_kw * dt;
        r.e_charge_kwh += d.p_charge_kw * dt;
        r.e_discharge_kwh += d.p_discharge_kw * dt;
        if d.p_dg_kw > 0.0 {
            r.dg_running_hours += dt;
        }
        r.grid_cost += cost.grid_cost;
        r.fuel_cost += cost.fuel_cost;
        r.fuel_liters += cost.fuel_liters;
    }
    r.e_pv_curtailed_kwh = r.e_pv_available_kwh - r.e_pv_dispatched_kwh;
    r.total_cost = r.grid_cost + r.fuel_cost;
    r.improvement_pct = baseline.and_then(|base| {
        let base_cost: f64 = base
            .decisions
            .iter()
            .zip(contexts)
            .map(|(d, ctx)| step_cost(d, &ctx.with_weights(Weights::MONETARY)).monetary())
            .sum();
        improvement_pct(base_cost, r.total_cost).ok()
    });
    r
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub diesel_only: CostReport,
    pub pv_battery_diesel: CostReport,
    pub improvement_pct: Option<f64>,
}

impl Comparison {
    pub fn new(
        optimized: &DispatchSchedule,
        baseline: &DispatchSchedule,
        contexts: &[StepContext<'_>],
    ) -> Self {
        let pv_battery_diesel = summarize(optimized, Some(baseline), contexts);
        let diesel_only = summarize(baseline, Some(baseline), contexts);
        Self {
            improvement_pct: pv_battery_diesel.improvement_pct,
            diesel_only,
            pv_battery_diesel,
        }
    }
}

fn pct(p: Option<f64>) -> String {
    p.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}%"))
}

pub fn render_report(title: &str, r: &CostReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{title}");
    let _ = writeln!(s, "{}", "-".repeat(title.len()));
    let rows: [(&str, String); 14] = [
        ("load energy (kWh)", format!("{:.1}", r.e_load_kwh)),
        ("grid energy (kWh)", format!("{:.1}", r.e_grid_kwh)),
        ("diesel energy (kWh)", format!("{:.1}", r.e_dg_kwh)),
        ("PV available (kWh)", format!("{:.1}", r.e_pv_available_kwh)),
        ("PV dispatched (kWh)", format!("{:.1}", r.e_pv_dispatched_kwh)),
        ("PV curtailed (kWh)", format!("{:.1}", r.e_pv_curtailed_kwh)),
        ("battery charge (kWh)", format!("{:.1}", r.e_charge_kwh)),
        ("battery discharge (kWh)", format!("{:.1}", r.e_discharge_kwh)),
        ("diesel running (h)", format!("{:.1}", r.dg_running_hours)),
        ("fuel (l)", format!("{:.1}", r.fuel_liters)),
        ("grid cost ($)", format!("{:.2}", r.grid_cost)),
        ("fuel cost ($)", format!("{:.2}", r.fuel_cost)),
        ("total cost ($)", format!("{:.2}", r.total_cost)),
        ("improvement vs diesel only", pct(r.improvement_pct)),
    ];
    for (label, value) in rows {
        let _ = writeln!(s, "{label:<28}{value:>14}");
    }
    s
}

pub fn render_comparison(c: &Comparison) -> String {
    let mut s = String::new();
    let line = |s: &mut String, label: &str, a: String, b: String| {
        let _ = writeln!(s, "{label:<24}{a:>16}{b:>20}");
    };
    line(&mut s, "", "Diesel only".into(), "PV-battery-diesel".into());
    let _ = writeln!(s, "{}", "-".repeat(60));
    let (base, opt) = (&c.diesel_only, &c.pv_battery_diesel);
    let rows: [(&str, f64, f64); 9] = [
        ("E grid (kWh)", base.e_grid_kwh, opt.e_grid_kwh),
        ("E diesel (kWh)", base.e_dg_kwh, opt.e_dg_kwh),
        ("E PV dispatched (kWh)", base.e_pv_dispatched_kwh, opt.e_pv_dispatched_kwh),
        ("E PV curtailed (kWh)", base.e_pv_curtailed_kwh, opt.e_pv_curtailed_kwh),
        ("fuel (l)", base.fuel_liters, opt.fuel_liters),
        ("diesel running (h)", base.dg_running_hours, opt.dg_running_hours),
        ("grid cost ($)", base.grid_cost, opt.grid_cost),
        ("fuel cost ($)", base.fuel_cost, opt.fuel_cost),
        ("total cost ($)", base.total_cost, opt.total_cost),
    ];
    for (label, a, b) in rows {
        line(&mut s, label, format!("{a:.1}"), format!("{b:.1}"));
    }
    let _ = writeln!(s, "{}", "-".repeat(60));
    line(&mut s, "improvement", String::new(), pct(c.improvement_pct));
    s
}
