use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn microgrid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_microgrid"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

fn shipped_dir(season: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(season)
}

/// Copies a shipped season into `dir` and applies `edit` to its config.
fn scenario_copy(dir: &Path, season: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let src = shipped_dir(season);
    for name in ["load_kw.csv", "irradiance_w_m2.csv", "ambient_temp_c.csv"] {
        fs::copy(src.join(name), dir.join(name)).unwrap();
    }
    let mut cfg: Value = serde_json::from_str(&fs::read_to_string(src.join("scenario.json")).unwrap()).unwrap();
    edit(&mut cfg);
    let path = dir.join("scenario.json");
    fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

fn summary(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

#[test]
fn run_default_writes_outputs_and_beats_baseline() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let res = microgrid(&["run", "--scenario", "default", "--output-dir", path_str(&out)]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    for f in ["summary.txt", "summary.json", "series.csv"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let s = summary(&out, "summary.json");
    assert!(s["improvement_pct"].as_f64().unwrap() > 0.0);
    let series = fs::read_to_string(out.join("series.csv")).unwrap();
    assert_eq!(series.lines().count(), 49);
}

#[test]
fn missing_profile_exits_1_naming_the_path() {
    let tmp = TempDir::new().unwrap();
    let cfg = scenario_copy(tmp.path(), "summer", |_| {});
    fs::remove_file(tmp.path().join("irradiance_w_m2.csv")).unwrap();
    let res = microgrid(&["run", "--scenario", path_str(&cfg), "--output-dir", path_str(&tmp.path().join("o"))]);
    assert_eq!(code(&res), 1);
    assert!(stderr(&res).contains("irradiance_w_m2.csv"), "{}", stderr(&res));
}

#[test]
fn unknown_config_key_exits_1() {
    let tmp = TempDir::new().unwrap();
    let cfg = scenario_copy(tmp.path(), "summer", |v| {
        v["colour"] = Value::from("blue");
    });
    let res = microgrid(&["run", "--scenario", path_str(&cfg), "--output-dir", path_str(&tmp.path().join("o"))]);
    assert_eq!(code(&res), 1);
    assert!(stderr(&res).contains("colour"), "{}", stderr(&res));
}

#[test]
fn bad_arguments_exit_1() {
    assert_eq!(code(&microgrid(&["run", "--season", "monsoon"])), 1);
    assert_eq!(code(&microgrid(&["frobnicate"])), 1);
    assert_eq!(code(&microgrid(&["--help"])), 0);
}

#[test]
fn permanent_blackout_without_diesel_exits_2() {
    let tmp = TempDir::new().unwrap();
    let cfg = scenario_copy(tmp.path(), "summer", |v| {
        v["grid"]["schedule"]["on_hours"] = Value::from(0.0);
        v["diesel"]["rating_kva"] = Value::from(0.001);
        v["diesel"]["nominal_power_kw"] = Value::from(0.001);
    });
    let res = microgrid(&["run", "--scenario", path_str(&cfg), "--output-dir", path_str(&tmp.path().join("o"))]);
    assert_eq!(code(&res), 2, "{}", stderr(&res));
    assert!(stderr(&res).contains("earliest infeasible step"));
}

#[test]
fn validate_accepts_run_and_baseline_output() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = path_str(&out);
    assert_eq!(code(&microgrid(&["run", "--season", "winter", "--output-dir", o])), 0);
    let series = out.join("series.csv");
    let res = microgrid(&["validate", "--season", "winter", "--schedule", path_str(&series)]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));

    assert_eq!(code(&microgrid(&["baseline", "--season", "winter", "--output-dir", o])), 0);
    let res = microgrid(&["validate", "--season", "winter", "--baseline", "--schedule", path_str(&series)]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
}

fn edit_field(series: &str, step: usize, column: &str, value: &str) -> String {
    let mut lines: Vec<String> = series.lines().map(str::to_string).collect();
    let col = lines[0].split(',').position(|c| c == column).unwrap();
    let mut fields: Vec<String> = lines[step + 1].split(',').map(str::to_string).collect();
    fields[col] = value.to_string();
    lines[step + 1] = fields.join(",");
    lines.join("\n") + "\n"
}

#[test]
fn validate_rejects_edited_and_truncated_files() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(code(&microgrid(&["run", "--output-dir", path_str(&out)])), 0);
    let text = fs::read_to_string(out.join("series.csv")).unwrap();

    // step 9 is a blackout hour of the default schedule
    let edited = tmp.path().join("edited.csv");
    fs::write(&edited, edit_field(&text, 9, "grid_p", "10.000000")).unwrap();
    let res = microgrid(&["validate", "--schedule", path_str(&edited)]);
    assert_eq!(code(&res), 3);
    let msg = stderr(&res);
    assert!(msg.contains("step 9") && msg.contains("grid import"), "{msg}");

    let truncated = tmp.path().join("truncated.csv");
    fs::write(&truncated, &text[..text.len() / 2]).unwrap();
    assert_eq!(code(&microgrid(&["validate", "--schedule", path_str(&truncated)])), 1);

    let garbled = tmp.path().join("garbled.csv");
    fs::write(&garbled, edit_field(&text, 3, "pv_p", "abc")).unwrap();
    assert_eq!(code(&microgrid(&["validate", "--schedule", path_str(&garbled)])), 1);
}

#[test]
fn compare_reports_both_policies() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let res = microgrid(&["compare", "--output-dir", path_str(&out)]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let c = summary(&out, "comparison.json");
    assert!(c["improvement_pct"].as_f64().unwrap() > 0.0);
    for policy in ["diesel_only", "pv_battery_diesel"] {
        assert!(c[policy]["e_grid_kwh"].is_number());
        assert!(c[policy]["e_dg_kwh"].is_number());
    }
    let text = String::from_utf8(res.stdout).unwrap();
    assert!(text.contains("E grid (kWh)") && text.contains("E diesel (kWh)"));
    assert!(out.join("series_optimized.csv").exists() && out.join("series_baseline.csv").exists());
}

#[test]
fn compare_without_pv_or_battery_shows_no_improvement() {
    let tmp = TempDir::new().unwrap();
    let cfg = scenario_copy(tmp.path(), "summer", |v| {
        v["pv"]["inverter_rating_kva"] = Value::from(0.0);
        v["battery"]["inverter_rating_kva"] = Value::from(0.0);
    });
    let out = tmp.path().join("out");
    let res = microgrid(&["compare", "--scenario", path_str(&cfg), "--output-dir", path_str(&out)]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let pct = summary(&out, "comparison.json")["improvement_pct"].as_f64().unwrap();
    assert!(pct.abs() < 1e-9, "{pct}");
}

#[test]
fn identical_invocations_write_identical_files() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        assert_eq!(code(&microgrid(&["compare", "--season", "fall", "--output-dir", path_str(dir)])), 0);
    }
    for f in ["comparison.txt", "comparison.json", "series_optimized.csv", "series_baseline.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn flags_override_config_values() {
    let tmp = TempDir::new().unwrap();
    let cfg = scenario_copy(tmp.path(), "summer", |_| {});
    let c = path_str(&cfg);
    let (coarse, fine) = (tmp.path().join("coarse"), tmp.path().join("fine"));
    assert_eq!(code(&microgrid(&["run", "--scenario", c, "--soc-levels", "11", "--output-dir", path_str(&coarse)])), 0);
    assert_eq!(code(&microgrid(&["run", "--scenario", c, "--output-dir", path_str(&fine)])), 0);
    let cost = |d: &Path| summary(d, "summary.json")["total_cost"].as_f64().unwrap();
    assert_ne!(cost(&coarse), cost(&fine));
    let res = microgrid(&["run", "--scenario", c, "--terminal-soc", "0.6", "--output-dir", path_str(&coarse)]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let last = fs::read_to_string(coarse.join("series.csv")).unwrap();
    let soc: f64 = last.lines().last().unwrap().split(',').nth(14).unwrap().parse().unwrap();
    assert!(soc >= 0.6 - 1e-6);
    assert_eq!(code(&microgrid(&["run", "--scenario", c, "--terminal-soc", "full", "--output-dir", path_str(&coarse)])), 1);
}

#[test]
fn emitted_default_scenarios_match_shipped_files() {
    let tmp = TempDir::new().unwrap();
    for season in ["winter", "spring", "summer", "fall"] {
        let dir = tmp.path().join(season);
        let res = microgrid(&["emit-default-scenario", "--season", season, "--output-dir", path_str(&dir)]);
        assert_eq!(code(&res), 0, "{}", stderr(&res));
        for f in ["scenario.json", "load_kw.csv", "irradiance_w_m2.csv", "ambient_temp_c.csv"] {
            assert_eq!(
                fs::read(dir.join(f)).unwrap(),
                fs::read(shipped_dir(season).join(f)).unwrap(),
                "{season}/{f} is stale"
            );
        }
    }
}

#[test]
fn shipped_scenario_runs_like_builtin_default() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let file = shipped_dir("summer").join("scenario.json");
    assert_eq!(code(&microgrid(&["run", "--scenario", path_str(&file), "--output-dir", path_str(&a)])), 0);
    assert_eq!(code(&microgrid(&["run", "--output-dir", path_str(&b)])), 0);
    assert_eq!(fs::read(a.join("series.csv")).unwrap(), fs::read(b.join("series.csv")).unwrap());
}
