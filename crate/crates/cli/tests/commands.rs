use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/synthetic_monthly.csv");
const SCHEMA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/schemas/compare_report.schema.json");

fn boxfill(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boxfill"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_monthly(dir: &Path, name: &str, values: &[f64]) -> PathBuf {
    let mut text = String::from("year,month,value,observed\n");
    for (i, v) in values.iter().enumerate() {
        text += &format!("{},{},{v},1\n", 1969 + i / 12, i % 12 + 1);
    }
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

/// Deterministic N(0,1) draws from a small LCG plus Box-Muller, to keep the
/// test data independent of the library's own generators.
fn gaussian(n: usize, seed: u64) -> Vec<f64> {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut uniform = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    };
    (0..n)
        .map(|_| {
            let (u, v) = (uniform(), uniform());
            (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
        })
        .collect()
}

#[test]
fn identify_emits_quarter_length_lags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("id");
    let o = boxfill(&["identify", "--input", FIXTURE, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("acf_pacf.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "lag,acf,pacf,band");
    assert_eq!(lines.len() - 1, 108);
    let id = json(&out.join("identify.json"));
    assert_eq!(id["series"]["n"], 432);
    assert_eq!(id["series"]["max_lag"], 108);
    assert_eq!(id["differenced"]["n"], 420);
}

#[test]
fn constant_series_fails_in_transform_stage() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_monthly(dir.path(), "flat.csv", &[3.0; 60]);
    let o = boxfill(&["identify", "--input", input.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let msg = stderr(&o);
    assert_eq!(msg.lines().count(), 1, "{msg}");
    assert!(msg.contains("autocorrelation"), "{msg}");
}

#[test]
fn white_noise_flags_few_lags() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..5 {
        let input = write_monthly(dir.path(), "wn.csv", &gaussian(432, seed));
        let out = dir.path().join(format!("o{seed}"));
        let o = boxfill(&[
            "identify",
            "--input",
            input.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--no-log",
            "--order",
            "0,0,0,0,0,0",
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let id = json(&out.join("identify.json"));
        let frac = id["series"]["acf_flagged_fraction"].as_f64().unwrap();
        assert!(frac <= 0.10, "seed {seed}: {frac}");
    }
}

const RUN_REPORTS: [&str; 7] = [
    "identify.json",
    "acf_pacf.csv",
    "model.json",
    "diagnostics.json",
    "residual_acf.csv",
    "forecast.csv",
    "evaluation.json",
];

#[test]
fn run_writes_all_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = boxfill(&[
        "run",
        "--input",
        FIXTURE,
        "--out",
        out.to_str().unwrap(),
        "--order",
        "1,0,0,0,1,1",
        "--s",
        "12",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in RUN_REPORTS {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let model = json(&out.join("model.json"));
    let names: Vec<&str> = model["coefficients"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["ar1", "sma1"]);
    assert_eq!(model["include_mean"], false);

    let diag = json(&out.join("diagnostics.json"));
    let ks: Vec<u64> = diag["rows"].as_array().unwrap().iter().map(|r| r["K"].as_u64().unwrap()).collect();
    assert_eq!(ks, [6, 12, 18, 24, 30, 36]);

    let fc = std::fs::read_to_string(out.join("forecast.csv")).unwrap();
    assert!(fc.starts_with("step,point,lower,upper,original_scale_point"));
    assert_eq!(fc.lines().count(), 13);

    let eval = json(&out.join("evaluation.json"));
    let t = &eval["in_sample"];
    let (m, n) = (&t["rows"][0], &t["rows"][1]);
    let ratio = m["rmse"].as_f64().unwrap() / n["rmse"].as_f64().unwrap();
    assert!((t["theil_u"].as_f64().unwrap() - ratio).abs() < 1e-12);
}

#[test]
fn force_mean_adds_coefficient() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fit");
    let o = boxfill(&["fit", "--input", FIXTURE, "--out", out.to_str().unwrap(), "--force-mean"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let model = json(&out.join("model.json"));
    assert_eq!(model["include_mean"], true);
    assert_eq!(model["forced_mean"], true);
    assert_eq!(model["coefficients"][2]["name"], "mean");
}

#[test]
fn holdout_reports_both_ranges() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ho");
    let o = boxfill(&["evaluate", "--input", FIXTURE, "--out", out.to_str().unwrap(), "--holdout", "24"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let eval = json(&out.join("evaluation.json"));
    assert_eq!(eval["holdout"]["n"], 24);
    assert_eq!(eval["in_sample"]["n"], 432 - 24 - 13);
}

#[test]
fn compare_zero_holes_is_bit_identical_and_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp");
    let o = boxfill(&["compare", "--input", FIXTURE, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&out.join("compare.json"));
    assert_eq!(r["complete"], r["missing"]);
    assert_eq!(r["theil_u"]["abs_difference"], 0.0);
    for f in RUN_REPORTS {
        assert_eq!(
            std::fs::read(out.join("complete").join(f)).unwrap(),
            std::fs::read(out.join("missing").join(f)).unwrap(),
            "{f}"
        );
    }

    let schema = json(Path::new(SCHEMA));
    let validator = jsonschema::validator_for(&schema).unwrap();
    assert!(validator.is_valid(&r));

    let out = dir.path().join("cmp_holes");
    let o = boxfill(&["compare", "--input", FIXTURE, "--out", out.to_str().unwrap(), "--holes", "22", "--seed", "7"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&out.join("compare.json"));
    let errors: Vec<String> = validator.iter_errors(&r).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
    assert_eq!(r["holes"]["indices"].as_array().unwrap().len(), 22);
    assert_eq!(r["missing"]["imputation"]["holes"].as_array().unwrap().len(), 22);
    assert_eq!(r["complete"]["imputation"], Value::Null);
}

#[test]
fn compare_failing_branch_leaves_partial_report() {
    // the filter needs a positive lag-1 autocorrelation; an alternating
    // series has a negative one, so only the punctured branch fails
    let dir = tempfile::tempdir().unwrap();
    let values: Vec<f64> = gaussian(240, 9)
        .iter()
        .enumerate()
        .map(|(i, e)| if i % 2 == 0 { 5.0 + 0.1 * e } else { -5.0 + 0.1 * e })
        .collect();
    let input = write_monthly(dir.path(), "alt.csv", &values);
    let out = dir.path().join("cmp");
    let o = boxfill(&[
        "compare",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--no-log",
        "--holes",
        "5",
        "--order",
        "1,0,0,0,0,0",
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let r = json(&out.join("compare.json"));
    assert_eq!(r["complete"]["status"], "ok");
    assert_eq!(r["missing"]["status"], "failed");
    assert_eq!(r["missing"]["failure"]["stage"], "transform");
    assert!(r["theil_u"]["complete"].is_number());
    assert!(r["theil_u"]["missing"].is_null());
}

#[test]
fn run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("r{k}"));
        let o = boxfill(&["run", "--input", FIXTURE, "--out", out.to_str().unwrap(), "--holes", "10", "--seed", "4"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        outputs.push(out);
    }
    for f in ["identify.json", "model.json", "diagnostics.json", "evaluation.json", "imputation.json", "holes.json"] {
        assert_eq!(std::fs::read(outputs[0].join(f)).unwrap(), std::fs::read(outputs[1].join(f)).unwrap(), "{f}");
    }
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("exp.conf");
    let out = dir.path().join("cfg");
    std::fs::write(&conf, format!("input = {FIXTURE}\nout = {}\nhorizon = 3\norder = 1,0,0,0,1,1\n", out.display())).unwrap();
    let o = boxfill(&["forecast", "--config", conf.to_str().unwrap(), "--horizon", "5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(out.join("forecast.csv")).unwrap().lines().count(), 6);

    std::fs::write(&conf, "nonsense = 1\n").unwrap();
    assert_eq!(code(&boxfill(&["run", "--config", conf.to_str().unwrap()])), 1);
}

#[test]
fn exit_codes_follow_stage_map() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("o");
    let o = o.to_str().unwrap();
    assert_eq!(code(&boxfill(&["run", "--bogus-flag"])), 1);
    assert_eq!(code(&boxfill(&["run", "--input", FIXTURE, "--out", o, "--order", "1,2"])), 1);
    assert_eq!(code(&boxfill(&["run", "--input", FIXTURE, "--out", o, "--level", "1.5"])), 1);
    assert_eq!(code(&boxfill(&["run", "--input", "/nonexistent/x.csv", "--out", o])), 5);
    assert_eq!(code(&boxfill(&["--help"])), 0);
    assert_eq!(code(&boxfill(&["--version"])), 0);

    // non-positive values cannot be logged
    let bad = write_monthly(dir.path(), "neg.csv", &gaussian(120, 1));
    assert_eq!(code(&boxfill(&["run", "--input", bad.to_str().unwrap(), "--out", o])), 2);

    // too few observations per parameter for the fit
    let short: Vec<f64> = gaussian(20, 2).iter().map(|v| v.exp()).collect();
    let short = write_monthly(dir.path(), "short.csv", &short);
    assert_eq!(code(&boxfill(&["run", "--input", short.to_str().unwrap(), "--out", o])), 3);

    // diagnostics need more residuals than the largest Ljung-Box lag
    let mid: Vec<f64> = gaussian(40, 3).iter().map(|v| v.exp()).collect();
    let mid = write_monthly(dir.path(), "mid.csv", &mid);
    let args = ["diagnose", "--input", mid.to_str().unwrap(), "--out", o];
    assert_eq!(code(&boxfill(&args)), 4);
}

#[test]
fn daily_ingest_and_impute() {
    let dir = tempfile::tempdir().unwrap();
    let daily = dir.path().join("daily.csv");
    let mut text = String::from("date,value\n");
    text += "2000-01-01,2\n2000-01-02,NA\n2000-01-31,4\n2000-03-05,9\n";
    std::fs::write(&daily, text).unwrap();
    let out = dir.path().join("ing");
    let o = boxfill(&["ingest", "--input", daily.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let monthly = std::fs::read_to_string(out.join("monthly.csv")).unwrap();
    let rows: Vec<&str> = monthly.lines().collect();
    assert_eq!(rows[0], "year,month,value,observed");
    assert_eq!(rows[1], format!("2000,1,{},1", 6.0 / 31.0));
    assert_eq!(rows[2], "2000,2,NA,0");
    assert_eq!(rows[3], format!("2000,3,{},1", 9.0 / 31.0));

    let o = boxfill(&[
        "ingest",
        "--input",
        daily.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--present-divisor",
    ]);
    assert_eq!(code(&o), 0);
    let monthly = std::fs::read_to_string(out.join("monthly.csv")).unwrap();
    assert_eq!(monthly.lines().nth(1).unwrap(), "2000,1,3,1");

    let imp = dir.path().join("imp");
    let o = boxfill(&[
        "impute",
        "--input",
        out.join("monthly.csv").to_str().unwrap(),
        "--out",
        imp.to_str().unwrap(),
        "--impute-strategy",
        "bounding",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let filled = std::fs::read_to_string(imp.join("imputed.csv")).unwrap();
    assert_eq!(filled.lines().nth(2).unwrap(), "2000,2,6,1");
    let report = json(&imp.join("imputation.json"));
    assert_eq!(report["strategy"], "bounding_average");
}

#[test]
fn simulate_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let o = boxfill(&["simulate", "--out", out.to_str().unwrap(), "--seed", seed, "--n", "60", "--exp"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        std::fs::read(out.join("monthly.csv")).unwrap()
    };
    assert_eq!(run("1", "a"), run("1", "b"));
    assert_ne!(run("1", "a"), run("2", "c"));
    let text = String::from_utf8(run("3", "d")).unwrap();
    assert_eq!(text.lines().count(), 61);
    assert!(text.lines().nth(1).unwrap().starts_with("1969,1,"));
}
