//! The batch pipeline for one dataset: impute, transform, identify, fit,
//! diagnose, forecast and evaluate.

use std::path::Path;

use boxfill::correlogram::Correlogram;
use boxfill::diagnostics::{adequacy_report, AdequacyReport, DEFAULT_LAGS};
use boxfill::evaluate::{holdout_errors, in_sample_errors, EvaluationReport, EvaluationTable};
use boxfill::filter::{
    baseline_impute, estimate_phi, filter_series, impute, FilterSpec, ImputationReport, Strategy,
};
use boxfill::ingest::{HoleSet, MonthlySeries};
use boxfill::sarima::{fit, forecast, FittedModel, ForecastResult, ModelOrder, ModelReport};
use boxfill::series::{log_transform, mean_significance, seasonal_difference, MeanTest, Series};
use serde::Serialize;

use crate::config::{ImputeChoice, PipelineConfig};
use crate::error::{CliError, Result, Stage};
use crate::io::{write_csv, write_json};

/// Last stage a command needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Through {
    Identify,
    Fit,
    Diagnose,
    Forecast,
    Evaluate,
}

/// Correlogram summary written to `identify.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentifyReport {
    pub n: usize,
    pub max_lag: usize,
    pub band: f64,
    pub acf_spikes: Vec<usize>,
    pub pacf_spikes: Vec<usize>,
    /// Share of ACF lags outside the band.
    pub acf_flagged_fraction: f64,
}

impl IdentifyReport {
    fn from_correlogram(c: &Correlogram) -> Self {
        let acf_spikes = c.acf_spikes();
        Self {
            n: c.n,
            max_lag: c.lags.len(),
            band: c.band,
            acf_flagged_fraction: acf_spikes.len() as f64 / c.lags.len().max(1) as f64,
            acf_spikes,
            pacf_spikes: c.pacf_spikes(),
        }
    }
}

/// Correlograms of the modeling-scale series and of its differenced form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentifySummary {
    pub series: IdentifyReport,
    pub differenced: IdentifyReport,
}

/// Model report plus the mean-retention test that decided `include_mean`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub label: String,
    pub mean_test: MeanTest,
    pub forced_mean: bool,
    #[serde(flatten)]
    pub model: ModelReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationSummary {
    pub in_sample: EvaluationTable,
    pub holdout: Option<EvaluationTable>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub stage: &'static str,
    pub exit_code: i32,
    pub message: String,
}

/// Everything one pass of the pipeline produced, up to a possible failure.
#[derive(Debug, Clone, Default)]
pub struct Branch {
    pub label: String,
    pub holes: Option<HoleSet>,
    pub imputation: Option<ImputationReport>,
    /// Series on the modeling scale before differencing (training part).
    pub modeling: Option<Series>,
    /// Differenced series passed to estimation.
    pub differenced: Option<Series>,
    pub correlogram: Option<Correlogram>,
    pub correlogram_differenced: Option<Correlogram>,
    pub identify: Option<IdentifySummary>,
    pub model: Option<FittedModel>,
    pub model_summary: Option<ModelSummary>,
    pub diagnostics: Option<AdequacyReport>,
    pub forecast: Option<ForecastResult>,
    pub evaluation: Option<EvaluationSummary>,
    pub error: Option<(Stage, String)>,
}

impl Branch {
    pub fn failure(&self) -> Option<Failure> {
        self.error.as_ref().map(|(stage, message)| Failure {
            stage: stage.name(),
            exit_code: stage.exit_code(),
            message: message.clone(),
        })
    }

    /// The branch itself, or its recorded failure as an error naming `name`.
    pub fn into_result(self, name: &'static str) -> Result<Self> {
        match &self.error {
            None => Ok(self),
            Some((stage, message)) => Err(CliError::Branch {
                failed: name,
                stage: *stage,
                message: message.clone(),
            }),
        }
    }
}

fn filter_spec(cfg: &PipelineConfig, s: &Series) -> Result<FilterSpec> {
    let phi = match cfg.phi {
        Some(phi) => phi,
        None => estimate_phi(s)?,
    };
    Ok(FilterSpec::new(phi, cfg.window)?)
}

/// Fills holes according to the configured strategy.
pub fn impute_series(cfg: &PipelineConfig, s: &Series) -> Result<(Series, Option<ImputationReport>)> {
    if s.is_fully_observed() {
        return Ok((s.clone(), None));
    }
    let result = match cfg.impute {
        ImputeChoice::None => return Ok((s.clone(), None)),
        ImputeChoice::Strategy(Strategy::Filter) => impute(s, &filter_spec(cfg, s)?)?,
        ImputeChoice::Strategy(other) => baseline_impute(s, other)?,
    };
    Ok((result.series.clone(), Some(result.report())))
}

/// Applies `d` regular and `D` seasonal differences.
pub fn difference(s: &Series, order: &ModelOrder) -> Result<Series> {
    let mut z = s.clone();
    for _ in 0..order.d {
        z = seasonal_difference(&z, 1)?;
    }
    for _ in 0..order.seasonal_d {
        z = seasonal_difference(&z, order.period)?;
    }
    Ok(z)
}

struct Modeling {
    full: Series,
    train: Series,
}

fn transform(cfg: &PipelineConfig, b: &mut Branch, monthly: &MonthlySeries) -> Result<Modeling> {
    let (mut s, report) = impute_series(cfg, &monthly.to_series())?;
    b.imputation = report;
    if cfg.prefilter {
        s = filter_series(&s, &filter_spec(cfg, &s)?)?;
    }
    let full = if cfg.log { log_transform(&s, cfg.offset)? } else { s };
    let train = match cfg.holdout {
        Some(h) if h >= full.len() => {
            return Err(CliError::Config(format!(
                "holdout {h} leaves no data for estimation ({} points)",
                full.len()
            )))
        }
        Some(h) => full.truncate(full.len() - h),
        None => full.clone(),
    };
    Ok(Modeling { full, train })
}

fn stages(cfg: &PipelineConfig, b: &mut Branch, monthly: &MonthlySeries, through: Through) -> Result<()> {
    let order = cfg.model_order()?;
    let m = transform(cfg, b, monthly)?;
    let z = difference(&m.train, &order)?;
    b.modeling = Some(m.train.clone());
    b.differenced = Some(z.clone());

    let c = Correlogram::compute(&m.train, None)?;
    let cz = Correlogram::compute(&z, None)?;
    b.identify = Some(IdentifySummary {
        series: IdentifyReport::from_correlogram(&c),
        differenced: IdentifyReport::from_correlogram(&cz),
    });
    b.correlogram = Some(c);
    b.correlogram_differenced = Some(cz);
    if through == Through::Identify {
        return Ok(());
    }

    let mean_test = mean_significance(&z, m.train.len(), order.first_computable_index())?;
    let include_mean = mean_test.retain_mean() || cfg.force_mean;
    let model = fit(&z, &order, include_mean)?;
    b.model_summary = Some(ModelSummary {
        label: monthly.label.clone(),
        mean_test,
        forced_mean: cfg.force_mean && !mean_test.retain_mean(),
        model: model.report(),
    });
    b.model = Some(model.clone());
    if through == Through::Fit {
        return Ok(());
    }

    b.diagnostics = Some(adequacy_report(&model, &DEFAULT_LAGS)?);
    if through == Through::Diagnose {
        return Ok(());
    }

    b.forecast = Some(forecast(&model, &m.train, cfg.horizon, cfg.level)?);
    if through == Through::Forecast {
        return Ok(());
    }

    let in_sample = EvaluationReport::from_aligned(monthly.label.as_str(), &in_sample_errors(&model, &m.train)?)?;
    let holdout = match cfg.holdout {
        Some(_) => {
            let e = holdout_errors(&model, &m.full, m.train.len())?;
            Some(EvaluationReport::from_aligned(monthly.label.as_str(), &e)?.table("ARIMA"))
        }
        None => None,
    };
    b.evaluation = Some(EvaluationSummary {
        in_sample: in_sample.table("ARIMA"),
        holdout,
    });
    Ok(())
}

/// Runs the pipeline on `monthly` through the requested stage. Failures are
/// recorded in the returned branch next to whatever was computed before them.
pub fn run_branch(cfg: &PipelineConfig, monthly: &MonthlySeries, holes: Option<HoleSet>, through: Through) -> Branch {
    let mut b = Branch {
        label: monthly.label.clone(),
        holes,
        ..Default::default()
    };
    if let Err(e) = stages(cfg, &mut b, monthly, through) {
        b.error = Some((e.stage(), e.to_string()));
    }
    b
}

/// File names written by [`write_branch`].
pub mod files {
    pub const IMPUTATION: &str = "imputation.json";
    pub const IDENTIFY: &str = "identify.json";
    pub const ACF_PACF: &str = "acf_pacf.csv";
    pub const ACF_PACF_DIFFERENCED: &str = "acf_pacf_differenced.csv";
    pub const SERIES: &str = "series.csv";
    pub const TRANSFORM: &str = "transform.json";
    pub const MODEL: &str = "model.json";
    pub const DIAGNOSTICS: &str = "diagnostics.json";
    pub const RESIDUAL_ACF: &str = "residual_acf.csv";
    pub const FORECAST: &str = "forecast.csv";
    pub const EVALUATION: &str = "evaluation.json";
}

/// Writes every artifact present in `b` into `dir`.
pub fn write_branch(dir: &Path, b: &Branch) -> Result<()> {
    if let Some(r) = &b.imputation {
        write_json(&dir.join(files::IMPUTATION), r)?;
    }
    if let Some(z) = &b.differenced {
        write_csv(&dir.join(files::SERIES), |w| z.write_csv(w))?;
        let sidecar = z.sidecar_json() + "\n";
        crate::io::write_atomic(&dir.join(files::TRANSFORM), |w| w.write_all(sidecar.as_bytes()))?;
    }
    if let (Some(r), Some(c), Some(cz)) = (&b.identify, &b.correlogram, &b.correlogram_differenced) {
        write_json(&dir.join(files::IDENTIFY), r)?;
        write_csv(&dir.join(files::ACF_PACF), |w| c.write_csv(w))?;
        write_csv(&dir.join(files::ACF_PACF_DIFFERENCED), |w| cz.write_csv(w))?;
    }
    if let Some(m) = &b.model_summary {
        write_json(&dir.join(files::MODEL), m)?;
    }
    if let Some(d) = &b.diagnostics {
        write_json(&dir.join(files::DIAGNOSTICS), d)?;
        write_csv(&dir.join(files::RESIDUAL_ACF), |w| d.write_acf_csv(w))?;
    }
    if let Some(f) = &b.forecast {
        write_csv(&dir.join(files::FORECAST), |w| f.write_csv(w))?;
    }
    if let Some(e) = &b.evaluation {
        write_json(&dir.join(files::EVALUATION), e)?;
    }
    Ok(())
}
