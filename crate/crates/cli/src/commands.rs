//! One function per subcommand.

use std::path::Path;

use boxfill::diagnostics::AdequacyReport;
use boxfill::filter::ImputationReport;
use boxfill::ingest::{puncture, write_monthly_csv, HoleSet, MonthlySeries, YearMonth};
use boxfill::sarima::{simulate_sarima, ArmaParams, ForecastResult, ModelOrder};
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::{CliError, Result};
use crate::io::{load_monthly, write_atomic, write_json};
use crate::pipeline::{
    impute_series, run_branch, write_branch, Branch, EvaluationSummary, Failure, IdentifySummary, ModelSummary, Through,
};

pub const MONTHLY_FILE: &str = "monthly.csv";
pub const HOLES_FILE: &str = "holes.json";
pub const IMPUTED_FILE: &str = "imputed.csv";
pub const COMPARE_FILE: &str = "compare.json";

fn load(cfg: &PipelineConfig) -> Result<MonthlySeries> {
    cfg.validate()?;
    load_monthly(cfg.input_path()?, cfg.divisor)
}

/// The input with `cfg.holes` observed values switched to missing.
fn punctured(cfg: &PipelineConfig, series: &MonthlySeries) -> Result<(MonthlySeries, Option<HoleSet>)> {
    if cfg.holes == 0 {
        return Ok((series.clone(), None));
    }
    let (s, holes) = puncture(series, cfg.holes, cfg.seed)?;
    Ok((s, Some(holes)))
}

fn write_monthly(path: &Path, series: &MonthlySeries) -> Result<()> {
    write_atomic(path, |w| write_monthly_csv(series, w).map_err(std::io::Error::other))
}

/// Monthly aggregation (and optional puncturing) of the input.
pub fn cmd_ingest(cfg: &PipelineConfig) -> Result<MonthlySeries> {
    let series = load(cfg)?;
    let (series, holes) = punctured(cfg, &series)?;
    write_monthly(&cfg.out.join(MONTHLY_FILE), &series)?;
    if let Some(h) = &holes {
        write_json(&cfg.out.join(HOLES_FILE), h)?;
    }
    Ok(series)
}

/// Fills holes and writes the completed monthly series.
pub fn cmd_impute(cfg: &PipelineConfig) -> Result<Option<ImputationReport>> {
    let series = load(cfg)?;
    let (series, holes) = punctured(cfg, &series)?;
    let (filled, report) = impute_series(cfg, &series.to_series())?;
    let out = MonthlySeries::new(series.start, filled.cells().to_vec(), series.label.clone());
    write_monthly(&cfg.out.join(IMPUTED_FILE), &out)?;
    if let Some(h) = &holes {
        write_json(&cfg.out.join(HOLES_FILE), h)?;
    }
    if let Some(r) = &report {
        write_json(&cfg.out.join(crate::pipeline::files::IMPUTATION), r)?;
    }
    Ok(report)
}

/// Runs the single-dataset pipeline through `through` and writes its artifacts.
pub fn cmd_pipeline(cfg: &PipelineConfig, through: Through) -> Result<Branch> {
    let series = load(cfg)?;
    let (series, holes) = punctured(cfg, &series)?;
    let branch = run_branch(cfg, &series, holes.clone(), through);
    write_branch(&cfg.out, &branch)?;
    if let Some(h) = &holes {
        write_json(&cfg.out.join(HOLES_FILE), h)?;
    }
    branch.into_result("run")
}

pub fn cmd_identify(cfg: &PipelineConfig) -> Result<Branch> {
    cmd_pipeline(cfg, Through::Identify)
}

pub fn cmd_run(cfg: &PipelineConfig) -> Result<Branch> {
    cmd_pipeline(cfg, Through::Evaluate)
}

/// Serializable view of one compare branch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchReport {
    pub status: &'static str,
    pub failure: Option<Failure>,
    pub imputation: Option<ImputationReport>,
    pub identify: Option<IdentifySummary>,
    pub model: Option<ModelSummary>,
    pub adequacy: Option<AdequacyReport>,
    pub forecast: Option<ForecastResult>,
    pub evaluation: Option<EvaluationSummary>,
}

impl BranchReport {
    pub fn from_branch(b: &Branch) -> Self {
        Self {
            status: if b.error.is_none() { "ok" } else { "failed" },
            failure: b.failure(),
            imputation: b.imputation.clone(),
            identify: b.identify.clone(),
            model: b.model_summary.clone(),
            adequacy: b.diagnostics.clone(),
            forecast: b.forecast.clone(),
            evaluation: b.evaluation.clone(),
        }
    }

    pub fn theil_u(&self) -> Option<f64> {
        self.evaluation.as_ref().map(|e| e.in_sample.theil_u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheilComparison {
    pub complete: Option<f64>,
    pub missing: Option<f64>,
    pub abs_difference: Option<f64>,
}

/// Complete data against punctured-then-imputed data, side by side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub label: String,
    pub order: ModelOrder,
    pub n: usize,
    pub holes: HoleSet,
    pub complete: BranchReport,
    pub missing: BranchReport,
    pub theil_u: TheilComparison,
}

/// Builds the comparison without touching the file system.
pub fn compare_series(cfg: &PipelineConfig, series: &MonthlySeries) -> Result<(CompareReport, Branch, Branch)> {
    let order = cfg.model_order()?;
    let (holed, holes) = punctured(cfg, series)?;
    let holes = holes.unwrap_or(HoleSet {
        indices: Vec::new(),
        seed: cfg.seed,
    });
    let (complete, missing) = std::thread::scope(|scope| {
        let c = scope.spawn(|| run_branch(cfg, series, None, Through::Evaluate));
        let m = run_branch(cfg, &holed, Some(holes.clone()), Through::Evaluate);
        (c.join().expect("complete branch does not panic"), m)
    });
    let (c, m) = (BranchReport::from_branch(&complete), BranchReport::from_branch(&missing));
    let theil_u = TheilComparison {
        complete: c.theil_u(),
        missing: m.theil_u(),
        abs_difference: c.theil_u().zip(m.theil_u()).map(|(a, b)| (a - b).abs()),
    };
    let report = CompareReport {
        label: series.label.clone(),
        order,
        n: series.len(),
        holes,
        complete: c,
        missing: m,
        theil_u,
    };
    Ok((report, complete, missing))
}

/// Writes `compare.json` plus each branch's artifacts under `complete/` and
/// `missing/`. A failing branch still leaves the partial report behind.
pub fn cmd_compare(cfg: &PipelineConfig) -> Result<CompareReport> {
    let series = load(cfg)?;
    let (report, complete, missing) = compare_series(cfg, &series)?;
    write_json(&cfg.out.join(COMPARE_FILE), &report)?;
    write_branch(&cfg.out.join("complete"), &complete)?;
    write_branch(&cfg.out.join("missing"), &missing)?;
    complete.into_result("complete")?;
    missing.into_result("missing")?;
    Ok(report)
}

/// Settings of the `simulate` command.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub order: ModelOrder,
    /// Coefficients in `ar, ma, sar, sma` order, as in the model report.
    pub coefficients: Vec<f64>,
    pub mean: Option<f64>,
    pub sigma: f64,
    pub n: usize,
    pub seed: u64,
    /// Exponentiate the path so it can be log-transformed again.
    pub exp: bool,
    pub start: YearMonth,
    pub out: std::path::PathBuf,
}

/// Seeded synthetic monthly series.
pub fn simulate_monthly(cfg: &SimulateConfig) -> Result<MonthlySeries> {
    let mut v = cfg.coefficients.clone();
    if let Some(mu) = cfg.mean {
        v.push(mu);
    }
    let params = ArmaParams::from_vector(&cfg.order, &v, cfg.mean.is_some())?;
    let y = simulate_sarima(&cfg.order, &params, cfg.sigma, cfg.n, cfg.seed)?;
    let values = y.observed().map(|x| Some(if cfg.exp { x.exp() } else { x })).collect();
    Ok(MonthlySeries::new(cfg.start, values, "simulated"))
}

pub fn cmd_simulate(cfg: &SimulateConfig) -> Result<MonthlySeries> {
    if !(cfg.sigma >= 0.0 && cfg.sigma.is_finite()) {
        return Err(CliError::Config(format!("sigma {} must be finite and non-negative", cfg.sigma)));
    }
    let series = simulate_monthly(cfg)?;
    write_monthly(&cfg.out.join(MONTHLY_FILE), &series)?;
    Ok(series)
}
