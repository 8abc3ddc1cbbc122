//! `microgrid` command-line front end.
//!
//! Exit codes: 0 success, 1 input error, 2 no feasible schedule,
//! 3 schedule file violates a constraint.

use std::ffi::OsString;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::dispatch::check_decision;
use crate::feasibility::{Constraint, Tolerances, Violation};
use crate::optimizer::{diesel_only_baseline, optimize, OptimizeError, SocGrid, TerminalSoc};
use crate::scenario::synthetic::{seasonal_profiles, Season, DEFAULT_SEED};
use crate::scenario::{
    config_to_json, default_case_study, emit_series, read_config, read_series, render_comparison,
    render_report, summarize, write_profile, write_series, Comparison, Scenario, ScenarioConfig,
};

#[derive(Debug, Parser)]
#[command(name = "microgrid", version, about = "PV-battery-diesel microgrid dispatch under grid blackouts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize the dispatch schedule and write summary and series files.
    Run(ScenarioArgs),
    /// Evaluate the diesel-only policy.
    Baseline(ScenarioArgs),
    /// Run both policies and write a side-by-side comparison.
    Compare(ScenarioArgs),
    /// Replay a series file through every constraint check.
    Validate(ValidateArgs),
    /// Write the default case-study config and synthetic profiles.
    EmitDefaultScenario(EmitArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// `default` for the built-in case study, or a path to a scenario JSON file.
    #[arg(long, default_value = "default")]
    pub scenario: String,
    /// Directory holding load_kw.csv, irradiance_w_m2.csv and ambient_temp_c.csv.
    /// Defaults to the scenario file's directory; the built-in case study
    /// generates synthetic profiles when omitted.
    #[arg(long)]
    pub profiles_dir: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub output_dir: PathBuf,
    /// Season of the synthetic profiles for the built-in case study.
    #[arg(long, default_value = "summer")]
    pub season: Season,
    /// Seed of the synthetic profiles.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub soc_levels: Option<usize>,
    #[arg(long)]
    pub dt_hours: Option<f64>,
    #[arg(long)]
    pub w1: Option<f64>,
    #[arg(long)]
    pub w2: Option<f64>,
    /// `free`, or a minimum terminal SOC fraction.
    #[arg(long)]
    pub terminal_soc: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Series file produced by `run` or `baseline`.
    #[arg(long)]
    pub schedule: PathBuf,
    /// The file holds a diesel-only schedule (no generator minimum loading).
    #[arg(long)]
    pub baseline: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EmitArgs {
    #[arg(long, default_value = "scenario")]
    pub output_dir: PathBuf,
    #[arg(long, default_value = "summer")]
    pub season: Season,
    #[arg(long)]
    pub seed: Option<u64>,
}

enum Failure {
    Input(anyhow::Error),
    Infeasible(OptimizeError),
    Violation { step: usize, violation: Violation },
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            1
        }
        Err(Failure::Infeasible(e)) => {
            eprintln!("error: {e}");
            2
        }
        Err(Failure::Violation { step, violation }) => {
            eprintln!("step {step}: {violation}");
            3
        }
    }
}

fn execute(command: &Command) -> Result<(), Failure> {
    match command {
        Command::Run(args) => run(args),
        Command::Baseline(args) => baseline(args),
        Command::Compare(args) => compare(args),
        Command::Validate(args) => validate(args),
        Command::EmitDefaultScenario(args) => emit_default_scenario(args).map_err(Failure::Input),
    }
}

fn parse_terminal(s: &str) -> Result<TerminalSoc> {
    if s.eq_ignore_ascii_case("free") {
        return Ok(TerminalSoc::Free);
    }
    let v: f64 = s
        .parse()
        .with_context(|| format!("--terminal-soc expects `free` or a number, got `{s}`"))?;
    Ok(TerminalSoc::AtLeast(v))
}

fn apply_overrides(cfg: &mut ScenarioConfig, args: &ScenarioArgs) -> Result<()> {
    if let Some(n) = args.soc_levels {
        cfg.soc_levels = n;
    }
    if let Some(dt) = args.dt_hours {
        cfg.dt_hours = dt;
    }
    if let Some(w1) = args.w1 {
        cfg.weights.w1 = w1;
    }
    if let Some(w2) = args.w2 {
        cfg.weights.w2 = w2;
    }
    if let Some(t) = &args.terminal_soc {
        cfg.terminal_soc = parse_terminal(t)?;
    }
    cfg.validate()?;
    Ok(())
}

/// Resolves the scenario named on the command line.
pub fn load_scenario(args: &ScenarioArgs) -> Result<Scenario> {
    if args.scenario == "default" {
        let mut cfg = default_case_study();
        apply_overrides(&mut cfg, args)?;
        return match &args.profiles_dir {
            Some(dir) => Ok(Scenario::from_profiles_dir(cfg, dir)?),
            None => {
                let p = seasonal_profiles(
                    args.season,
                    cfg.horizon_steps,
                    args.seed.unwrap_or(DEFAULT_SEED),
                );
                Ok(Scenario::new(cfg, p.load, p.irradiance, p.temperature)?)
            }
        };
    }
    let path = Path::new(&args.scenario);
    let mut cfg = read_config(path)?;
    apply_overrides(&mut cfg, args)?;
    let dir = match &args.profiles_dir {
        Some(d) => d.clone(),
        None => path.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    Ok(Scenario::from_profiles_dir(cfg, &dir)?)
}

fn prepare_output(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_series_file(path: &Path, rows: &[crate::scenario::SeriesRow]) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_series(rows, BufWriter::new(file)).with_context(|| format!("writing {}", path.display()))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn run(args: &ScenarioArgs) -> Result<(), Failure> {
    let scenario = load_scenario(args)?;
    prepare_output(&args.output_dir)?;
    let problem = scenario.problem();
    let schedule = optimize(&problem).map_err(Failure::Infeasible)?;
    let baseline = diesel_only_baseline(&problem)
        .inspect_err(|e| log::warn!("diesel-only baseline unavailable: {e}"))
        .ok();
    let report = summarize(&schedule, baseline.as_ref(), &problem.contexts);
    let text = render_report("PV-battery-diesel", &report);
    write_file(&args.output_dir.join("summary.txt"), &text)?;
    write_file(&args.output_dir.join("summary.json"), &to_json(&report))?;
    write_series_file(
        &args.output_dir.join("series.csv"),
        &emit_series(&schedule, &problem.contexts),
    )?;
    print!("{text}");
    Ok(())
}

fn baseline(args: &ScenarioArgs) -> Result<(), Failure> {
    let scenario = load_scenario(args)?;
    prepare_output(&args.output_dir)?;
    let problem = scenario.problem();
    let base = diesel_only_baseline(&problem).map_err(Failure::Infeasible)?;
    let report = summarize(&base, Some(&base), &problem.contexts);
    let text = render_report("Diesel only", &report);
    write_file(&args.output_dir.join("summary.txt"), &text)?;
    write_file(&args.output_dir.join("summary.json"), &to_json(&report))?;
    write_series_file(
        &args.output_dir.join("series.csv"),
        &emit_series(&base, &problem.contexts),
    )?;
    print!("{text}");
    Ok(())
}

fn compare(args: &ScenarioArgs) -> Result<(), Failure> {
    let scenario = load_scenario(args)?;
    prepare_output(&args.output_dir)?;
    let problem = scenario.problem();
    let base = diesel_only_baseline(&problem).map_err(Failure::Infeasible)?;
    let opt = optimize(&problem).map_err(Failure::Infeasible)?;
    let cmp = Comparison::new(&opt, &base, &problem.contexts);
    let text = render_comparison(&cmp);
    write_file(&args.output_dir.join("comparison.txt"), &text)?;
    write_file(&args.output_dir.join("comparison.json"), &to_json(&cmp))?;
    write_series_file(
        &args.output_dir.join("series_optimized.csv"),
        &emit_series(&opt, &problem.contexts),
    )?;
    write_series_file(
        &args.output_dir.join("series_baseline.csv"),
        &emit_series(&base, &problem.contexts),
    )?;
    print!("{text}");
    Ok(())
}

const CONTEXT_TOL: f64 = 1e-5;

fn validate(args: &ValidateArgs) -> Result<(), Failure> {
    let scenario = load_scenario(&args.scenario)?;
    let file = fs::File::open(&args.schedule)
        .with_context(|| format!("opening {}", args.schedule.display()))?;
    let rows = read_series(file).with_context(|| format!("reading {}", args.schedule.display()))?;
    let contexts = scenario.contexts();
    if rows.len() != contexts.len() {
        return Err(Failure::Input(anyhow::anyhow!(
            "{} has {} rows, scenario horizon is {}",
            args.schedule.display(),
            rows.len(),
            contexts.len()
        )));
    }
    let tol = Tolerances::SERIES_FILE;
    let battery = &scenario.plant.battery;
    let grid = SocGrid::new(battery, scenario.config.soc_levels);
    let mut soc_prev = grid.level(grid.nearest(scenario.config.initial_soc));
    for (k, (row, ctx)) in rows.iter().zip(&contexts).enumerate() {
        if row.step != k {
            return Err(Failure::Input(anyhow::anyhow!(
                "row {k} carries step {}, expected {k}",
                row.step
            )));
        }
        let fail = |constraint, excess| Failure::Violation {
            step: k,
            violation: Violation { constraint, excess },
        };
        let context_pairs = [
            (row.load_p, ctx.load_p_kw),
            (row.load_q, ctx.load_q_kvar),
            (row.grid_avail_kva, ctx.grid_available_kva),
            (row.pv_avail, ctx.pv_available_kw),
            (row.soc_min, battery.soc_min()),
            (row.soc_max, 1.0),
        ];
        if let Some(diff) = context_pairs
            .iter()
            .map(|(a, b)| (a - b).abs())
            .find(|&d| d > CONTEXT_TOL)
        {
            return Err(fail(Constraint::ContextMismatch, diff));
        }
        let f = check_decision(&row.decision(), ctx, &tol, !args.baseline);
        if let Some(&violation) = f.first() {
            return Err(Failure::Violation { step: k, violation });
        }
        let soc_excess = (battery.soc_min() - row.soc).max(row.soc - 1.0);
        if soc_excess > tol.soc {
            return Err(fail(Constraint::SocBounds, soc_excess));
        }
        let expected = crate::components::soc_after(
            soc_prev,
            row.batt_charge,
            row.batt_discharge,
            ctx.dt_hours,
            battery,
        );
        if (expected - row.soc).abs() > tol.soc {
            return Err(fail(Constraint::SocDynamics, (expected - row.soc).abs()));
        }
        soc_prev = row.soc;
    }
    eprintln!("{}: {} steps pass every check", args.schedule.display(), rows.len());
    Ok(())
}

/// Writes `scenario.json` plus the three synthetic profiles for a season.
pub fn emit_default_scenario(args: &EmitArgs) -> Result<()> {
    let cfg = default_case_study();
    let dir = &args.output_dir;
    prepare_output(dir)?;
    write_file(&dir.join("scenario.json"), &config_to_json(&cfg))?;
    let p = seasonal_profiles(args.season, cfg.horizon_steps, args.seed.unwrap_or(DEFAULT_SEED));
    for profile in [&p.load, &p.irradiance, &p.temperature] {
        let path = dir.join(profile.kind.file_name());
        let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        write_profile(profile, BufWriter::new(file))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    eprintln!("wrote {} scenario to {}", args.season, dir.display());
    Ok(())
}
