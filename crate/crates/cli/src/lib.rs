//! Batch front end: argument parsing, configuration and the subcommands.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;

use std::path::PathBuf;

use boxfill::ingest::YearMonth;
use clap::{Args, Parser, Subcommand};

use crate::commands::SimulateConfig;
use crate::config::{parse_order, PipelineConfig};
use crate::error::{CliError, Result};
use crate::pipeline::Through;

#[derive(Debug, Parser)]
#[command(name = "boxfill", version, about = "Seasonal ARIMA workflow with filter-based imputation of missing months")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Aggregate a daily file to monthly means (optionally punching holes).
    Ingest(PipelineArgs),
    /// ACF/PACF of the transformed series.
    Identify(PipelineArgs),
    /// Fill missing months.
    Impute(PipelineArgs),
    /// Estimate the seasonal ARIMA model.
    Fit(PipelineArgs),
    /// Ljung-Box adequacy checks of the fitted model.
    Diagnose(PipelineArgs),
    /// Forecasts with confidence intervals.
    Forecast(PipelineArgs),
    /// MSE/RMSE of the model and the naive forecast, and Theil's U.
    Evaluate(PipelineArgs),
    /// Every stage, writing all reports.
    Run(PipelineArgs),
    /// Complete data against punctured and imputed data.
    Compare(PipelineArgs),
    /// Write a seeded synthetic monthly series.
    Simulate(SimulateArgs),
}

/// Flags shared by the pipeline commands. Unset flags fall back to the
/// config file, then to built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct PipelineArgs {
    /// Flat `key = value` file; flags given here override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Daily `date,value` or monthly `year,month,value,observed` CSV.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Model order `p,d,q,P,D,Q`.
    #[arg(long)]
    pub order: Option<String>,
    /// Season length.
    #[arg(long = "s")]
    pub period: Option<usize>,
    /// Model the natural log of the series (default).
    #[arg(long, overrides_with = "no_log")]
    pub log: bool,
    /// Model the series on its original scale.
    #[arg(long = "no-log", overrides_with = "log")]
    pub no_log: bool,
    /// Added before taking logs.
    #[arg(long)]
    pub offset: Option<f64>,
    /// Filter weight base; estimated as the lag-1 autocorrelation when absent.
    #[arg(long)]
    pub phi: Option<f64>,
    /// Filter window length.
    #[arg(long = "M")]
    pub window: Option<usize>,
    /// filter, mean, naive, trend, bounding or none.
    #[arg(long = "impute-strategy")]
    pub impute_strategy: Option<String>,
    /// Smooth the whole series with the filter before modeling.
    #[arg(long)]
    pub prefilter: bool,
    /// Number of observed months to remove at random.
    #[arg(long)]
    pub holes: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Forecast horizon in months.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Confidence level of the forecast intervals.
    #[arg(long)]
    pub level: Option<f64>,
    /// Keep the mean even when its t-value is below 2.
    #[arg(long = "force-mean")]
    pub force_mean: bool,
    /// Trailing months kept out of estimation and scored separately.
    #[arg(long)]
    pub holdout: Option<usize>,
    /// Divide monthly sums by the number of days with a reading.
    #[arg(long = "present-divisor")]
    pub present_divisor: bool,
}

impl PipelineArgs {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<PipelineConfig> {
        let mut c = PipelineConfig::default();
        if let Some(path) = &self.config {
            c.apply_file(path)?;
        }
        let mut set = |key: &str, value: Option<String>| match value {
            Some(v) => c.set(key, &v),
            None => Ok(()),
        };
        let text = |p: &Option<PathBuf>| p.as_ref().map(|p| p.to_string_lossy().into_owned());
        set("input", text(&self.input))?;
        set("out", text(&self.out))?;
        set("order", self.order.clone())?;
        set("s", self.period.map(|v| v.to_string()))?;
        set("offset", self.offset.map(|v| v.to_string()))?;
        set("phi", self.phi.map(|v| v.to_string()))?;
        set("M", self.window.map(|v| v.to_string()))?;
        set("impute-strategy", self.impute_strategy.clone())?;
        set("holes", self.holes.map(|v| v.to_string()))?;
        set("seed", self.seed.map(|v| v.to_string()))?;
        set("horizon", self.horizon.map(|v| v.to_string()))?;
        set("level", self.level.map(|v| v.to_string()))?;
        set("holdout", self.holdout.map(|v| v.to_string()))?;
        set("log", (self.log || self.no_log).then(|| self.log.to_string()))?;
        set("prefilter", self.prefilter.then(|| "true".into()))?;
        set("force-mean", self.force_mean.then(|| "true".into()))?;
        set("present-divisor", self.present_divisor.then(|| "true".into()))?;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Output directory; the series goes to `monthly.csv`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "1,0,0,0,1,1")]
    pub order: String,
    #[arg(long = "s", default_value_t = 12)]
    pub period: usize,
    /// Coefficients in ar, ma, sar, sma order, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0.16,0.86")]
    pub coefs: Vec<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mean: Option<f64>,
    #[arg(long, default_value_t = 0.9)]
    pub sigma: f64,
    #[arg(long, default_value_t = 432)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Exponentiate the simulated path (a positive, log-modelable series).
    #[arg(long)]
    pub exp: bool,
    /// First month as `YYYY-MM`.
    #[arg(long, default_value = "1969-01")]
    pub start: String,
}

impl SimulateArgs {
    pub fn resolve(&self) -> Result<SimulateConfig> {
        let bad_start = || CliError::Config(format!("start `{}` must look like YYYY-MM", self.start));
        let (y, m) = self.start.split_once('-').ok_or_else(bad_start)?;
        let year: i32 = y.parse().map_err(|_| bad_start())?;
        let month: u32 = m.parse().map_err(|_| bad_start())?;
        if !(1..=12).contains(&month) {
            return Err(bad_start());
        }
        Ok(SimulateConfig {
            order: parse_order(&self.order, self.period)?,
            coefficients: self.coefs.clone(),
            mean: self.mean,
            sigma: self.sigma,
            n: self.n,
            seed: self.seed,
            exp: self.exp,
            start: YearMonth::new(year, month),
            out: self.out.clone(),
        })
    }
}

/// Runs a parsed command and returns the line to print on success.
pub fn execute(cli: &Cli) -> Result<String> {
    use crate::commands::*;
    let through = |args: &PipelineArgs, t: Through| -> Result<String> {
        let cfg = args.resolve()?;
        let b = cmd_pipeline(&cfg, t)?;
        Ok(match (t, &b.diagnostics, &b.evaluation) {
            (Through::Evaluate, Some(d), Some(e)) => format!(
                "adequacy: {:?}, Theil's U = {:.6} ({}); reports in {}",
                d.verdict,
                e.in_sample.theil_u,
                e.in_sample.verdict,
                cfg.out.display()
            ),
            _ => format!("reports in {}", cfg.out.display()),
        })
    };
    match &cli.command {
        Command::Ingest(a) => {
            let cfg = a.resolve()?;
            let s = cmd_ingest(&cfg)?;
            Ok(format!("{} months ({} observed) in {}", s.len(), s.observed_count(), cfg.out.display()))
        }
        Command::Impute(a) => {
            let cfg = a.resolve()?;
            let r = cmd_impute(&cfg)?;
            Ok(format!("{} holes filled; reports in {}", r.map_or(0, |r| r.holes.len()), cfg.out.display()))
        }
        Command::Identify(a) => through(a, Through::Identify),
        Command::Fit(a) => through(a, Through::Fit),
        Command::Diagnose(a) => through(a, Through::Diagnose),
        Command::Forecast(a) => through(a, Through::Forecast),
        Command::Evaluate(a) | Command::Run(a) => through(a, Through::Evaluate),
        Command::Compare(a) => {
            let cfg = a.resolve()?;
            let r = cmd_compare(&cfg)?;
            let u = |v: Option<f64>| v.map_or("n/a".to_string(), |u| format!("{u:.6}"));
            Ok(format!(
                "Theil's U complete = {}, missing = {}; report in {}",
                u(r.theil_u.complete),
                u(r.theil_u.missing),
                cfg.out.join(COMPARE_FILE).display()
            ))
        }
        Command::Simulate(a) => {
            let cfg = a.resolve()?;
            let s = cmd_simulate(&cfg)?;
            Ok(format!("{} months in {}", s.len(), cfg.out.join(MONTHLY_FILE).display()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.conf");
        std::fs::write(&path, "input = a.csv\nholes = 5\nlog = false\nhorizon = 6\n").unwrap();
        let cli = Cli::try_parse_from([
            "boxfill",
            "run",
            "--config",
            path.to_str().unwrap(),
            "--holes",
            "9",
            "--log",
        ])
        .unwrap();
        let Command::Run(args) = cli.command else { panic!() };
        let c = args.resolve().unwrap();
        assert_eq!(c.input, Some(PathBuf::from("a.csv")));
        assert_eq!(c.holes, 9);
        assert!(c.log);
        assert_eq!(c.horizon, 6);
    }

    #[test]
    fn log_flags_toggle() {
        let parse = |extra: &[&str]| {
            let mut v = vec!["boxfill", "fit"];
            v.extend_from_slice(extra);
            let Command::Fit(a) = Cli::try_parse_from(v).unwrap().command else { panic!() };
            a.resolve().unwrap().log
        };
        assert!(parse(&[]));
        assert!(!parse(&["--no-log"]));
        assert!(parse(&["--no-log", "--log"]));
    }

    #[test]
    fn simulate_args() {
        let cli = Cli::try_parse_from(["boxfill", "simulate", "--out", "x", "--coefs", "-0.3,0.5", "--start", "2000-07"]).unwrap();
        let Command::Simulate(a) = cli.command else { panic!() };
        let c = a.resolve().unwrap();
        assert_eq!(c.coefficients, vec![-0.3, 0.5]);
        assert_eq!(c.start, YearMonth::new(2000, 7));
    }
}
