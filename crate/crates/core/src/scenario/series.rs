use std::io::{Read, Write};

use thiserror::Error;

use crate::dispatch::{StepContext, StepDecision};
use crate::optimizer::DispatchSchedule;

pub const SERIES_COLUMNS: [&str; 17] = [
    "step",
    "load_p",
    "load_q",
    "grid_avail_kva",
    "grid_p",
    "grid_q",
    "pv_avail",
    "pv_p",
    "pv_q",
    "dg_p",
    "dg_q",
    "batt_charge",
    "batt_discharge",
    "batt_q",
    "soc",
    "soc_min",
    "soc_max",
];

/// One plottable row per step; `soc` is the state after the step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub step: usize,
    pub load_p: f64,
    pub load_q: f64,
    pub grid_avail_kva: f64,
    pub grid_p: f64,
    pub grid_q: f64,
    pub pv_avail: f64,
    pub pv_p: f64,
    pub pv_q: f64,
    pub dg_p: f64,
    pub dg_q: f64,
    pub batt_charge: f64,
    pub batt_discharge: f64,
    pub batt_q: f64,
    pub soc: f64,
    pub soc_min: f64,
    pub soc_max: f64,
}

impl SeriesRow {
    fn values(&self) -> [f64; 16] {
        [
            self.load_p,
            self.load_q,
            self.grid_avail_kva,
            self.grid_p,
            self.grid_q,
            self.pv_avail,
            self.pv_p,
            self.pv_q,
            self.dg_p,
            self.dg_q,
            self.batt_charge,
            self.batt_discharge,
            self.batt_q,
            self.soc,
            self.soc_min,
            self.soc_max,
        ]
    }

    fn from_values(step: usize, v: [f64; 16]) -> Self {
        Self {
            step,
            load_p: v[0],
            load_q: v[1],
            grid_avail_kva: v[2],
            grid_p: v[3],
            grid_q: v[4],
            pv_avail: v[5],
            pv_p: v[6],
            pv_q: v[7],
            dg_p: v[8],
            dg_q: v[9],
            batt_charge: v[10],
            batt_discharge: v[11],
            batt_q: v[12],
            soc: v[13],
            soc_min: v[14],
            soc_max: v[15],
        }
    }

    pub fn decision(&self) -> StepDecision {
        StepDecision {
            p_pv_kw: self.pv_p,
            q_pv_kvar: self.pv_q,
            p_grid_kw: self.grid_p,
            q_grid_kvar: self.grid_q,
            p_dg_kw: self.dg_p,
            q_dg_kvar: self.dg_q,
            p_charge_kw: self.batt_charge,
            p_discharge_kw: self.batt_discharge,
            q_batt_kvar: self.batt_q,
            s1: self.batt_charge > 0.0,
            s2: self.batt_discharge > 0.0,
        }
    }
}

pub fn emit_series(schedule: &DispatchSchedule, contexts: &[StepContext<'_>]) -> Vec<SeriesRow> {
    schedule
        .decisions
        .iter()
        .zip(contexts)
        .enumerate()
        .map(|(k, (d, ctx))| SeriesRow {
            step: ctx.step,
            load_p: ctx.load_p_kw,
            load_q: ctx.load_q_kvar,
            grid_avail_kva: ctx.grid_available_kva,
            grid_p: d.p_grid_kw,
            grid_q: d.q_grid_kvar,
            pv_avail: ctx.pv_available_kw,
            pv_p: d.p_pv_kw,
            pv_q: d.q_pv_kvar,
            dg_p: d.p_dg_kw,
            dg_q: d.q_dg_kvar,
            batt_charge: d.p_charge_kw,
            batt_discharge: d.p_discharge_kw,
            batt_q: d.q_batt_kvar,
            soc: schedule.soc_trajectory[k + 1],
            soc_min: ctx.plant.battery.soc_min(),
            soc_max: 1.0,
        })
        .collect()
}

/// Comma-separated, six fixed decimals, LF line endings.
pub fn write_series<W: Write>(rows: &[SeriesRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", SERIES_COLUMNS.join(","))?;
    for row in rows {
        write!(out, "{}", row.step)?;
        for v in row.values() {
            // avoid "-0.000000" for values that round to zero
            let v = if v.abs() < 5e-7 { 0.0 } else { v };
            write!(out, ",{v:.6}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
}

pub fn read_series<R: Read>(reader: R) -> Result<Vec<SeriesRow>, SeriesError> {
    let err = |line: u64, message: String| SeriesError::Parse { line, message };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(reader);
    let mut rows = Vec::new();
    let mut header_seen = false;
    for record in rdr.records() {
        let record = record.map_err(|e| err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if !header_seen {
            if record.iter().ne(SERIES_COLUMNS.iter().copied()) {
                return Err(err(line, "unexpected series header".into()));
            }
            header_seen = true;
            continue;
        }
        if record.len() != SERIES_COLUMNS.len() {
            return Err(err(
                line,
                format!("expected {} fields, found {}", SERIES_COLUMNS.len(), record.len()),
            ));
        }
        let step: usize = record[0]
            .parse()
            .map_err(|_| err(line, format!("invalid step `{}`", &record[0])))?;
        let mut values = [0.0; 16];
        for (slot, (field, name)) in values
            .iter_mut()
            .zip(record.iter().skip(1).zip(&SERIES_COLUMNS[1..]))
        {
            let v: f64 = field
                .parse()
                .map_err(|_| err(line, format!("invalid {name} `{field}`")))?;
            if !v.is_finite() {
                return Err(err(line, format!("non-finite {name}")));
            }
            *slot = v;
        }
        rows.push(SeriesRow::from_values(step, values));
    }
    if rows.is_empty() {
        return Err(err(1, "series has no data rows".into()));
    }
    Ok(rows)
}
