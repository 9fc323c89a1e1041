//! Pipeline configuration: defaults, a flat `key = value` file, then flags.

use std::path::{Path, PathBuf};

use boxfill::filter::{Strategy, DEFAULT_WINDOW};
use boxfill::ingest::DayDivisor;
use boxfill::sarima::ModelOrder;
use serde::Serialize;

use crate::error::{CliError, Result};

/// How holes are handled before modeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputeChoice {
    Strategy(Strategy),
    /// Leave holes in place; estimation skips residuals that touch them.
    None,
}

impl ImputeChoice {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "filter" => ImputeChoice::Strategy(Strategy::Filter),
            "mean" => ImputeChoice::Strategy(Strategy::Mean),
            "naive" => ImputeChoice::Strategy(Strategy::Naive),
            "trend" => ImputeChoice::Strategy(Strategy::Trend),
            "bounding" | "bounding_average" => ImputeChoice::Strategy(Strategy::BoundingAverage),
            "none" => ImputeChoice::None,
            other => {
                return Err(CliError::Config(format!(
                    "unknown impute strategy `{other}` (expected filter, mean, naive, trend, bounding or none)"
                )))
            }
        })
    }
}

/// `p,d,q,P,D,Q` as six comma-separated integers.
pub fn parse_order(text: &str, period: usize) -> Result<ModelOrder> {
    let parts: Vec<usize> = text
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| CliError::Config(format!("order `{text}` must be six non-negative integers p,d,q,P,D,Q")))?;
    let [p, d, q, sp, sd, sq] = parts[..] else {
        return Err(CliError::Config(format!(
            "order `{text}` has {} fields, expected p,d,q,P,D,Q",
            parts.len()
        )));
    };
    ModelOrder::new((p, d, q), (sp, sd, sq), period).map_err(|e| CliError::Config(e.to_string()))
}

/// Every knob of the batch pipeline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    pub period: usize,
    pub log: bool,
    pub offset: f64,
    pub order: String,
    pub phi: Option<f64>,
    pub window: usize,
    pub impute: ImputeChoice,
    pub prefilter: bool,
    pub holes: usize,
    pub seed: u64,
    pub horizon: usize,
    pub level: f64,
    pub force_mean: bool,
    /// Number of trailing points kept out of estimation.
    pub holdout: Option<usize>,
    pub divisor: DayDivisor,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input: None,
            out: PathBuf::from("out"),
            period: 12,
            log: true,
            offset: 0.0,
            order: "1,0,0,0,1,1".into(),
            phi: None,
            window: DEFAULT_WINDOW,
            impute: ImputeChoice::Strategy(Strategy::Filter),
            prefilter: false,
            holes: 0,
            seed: 0,
            horizon: 12,
            level: 0.95,
            force_mean: false,
            holdout: None,
            divisor: DayDivisor::Calendar,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(CliError::Config(format!("invalid boolean `{value}` for `{key}`"))),
    }
}

impl PipelineConfig {
    /// Applies one `key = value` setting. Keys are the long flag names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "input" => self.input = Some(PathBuf::from(value)),
            "out" => self.out = PathBuf::from(value),
            "s" => self.period = parse_value(key, value)?,
            "log" => self.log = parse_bool(key, value)?,
            "offset" => self.offset = parse_value(key, value)?,
            "order" => self.order = value.to_string(),
            "phi" => self.phi = Some(parse_value(key, value)?),
            "M" => self.window = parse_value(key, value)?,
            "impute-strategy" => self.impute = ImputeChoice::parse(value)?,
            "prefilter" => self.prefilter = parse_bool(key, value)?,
            "holes" => self.holes = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "horizon" => self.horizon = parse_value(key, value)?,
            "level" => self.level = parse_value(key, value)?,
            "force-mean" => self.force_mean = parse_bool(key, value)?,
            "holdout" => self.holdout = Some(parse_value(key, value)?),
            "present-divisor" => {
                self.divisor = if parse_bool(key, value)? {
                    DayDivisor::Present
                } else {
                    DayDivisor::Calendar
                }
            }
            other => return Err(CliError::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Reads `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_file_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("config line {}: expected `key = value`", i + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        self.apply_file_text(&text)
    }

    pub fn model_order(&self) -> Result<ModelOrder> {
        parse_order(&self.order, self.period)
    }

    pub fn input_path(&self) -> Result<&Path> {
        self.input
            .as_deref()
            .ok_or_else(|| CliError::Config("no input file given (--input or `input =` in the config)".into()))
    }

    /// Checks the ranges the pipeline relies on.
    pub fn validate(&self) -> Result<()> {
        self.model_order()?;
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(CliError::Config(format!("level {} must lie in (0, 1)", self.level)));
        }
        if self.horizon == 0 {
            return Err(CliError::Config("horizon must be positive".into()));
        }
        if self.window == 0 {
            return Err(CliError::Config("M must be positive".into()));
        }
        if let Some(phi) = self.phi {
            if !(phi > 0.0 && phi < 1.0) {
                return Err(CliError::Config(format!("phi {phi} must lie in (0, 1)")));
            }
        }
        if self.offset < 0.0 || !self.offset.is_finite() {
            return Err(CliError::Config(format!("offset {} must be finite and non-negative", self.offset)));
        }
        if self.holdout == Some(0) {
            return Err(CliError::Config("holdout must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_keys() {
        let mut c = PipelineConfig::default();
        c.apply_file_text("# experiment\ninput = data.csv\ns=4\nlog = false # raw scale\nM = 6\nimpute-strategy = bounding\n")
            .unwrap();
        assert_eq!(c.input.as_deref(), Some(Path::new("data.csv")));
        assert_eq!(c.period, 4);
        assert!(!c.log);
        assert_eq!(c.window, 6);
        assert_eq!(c.impute, ImputeChoice::Strategy(Strategy::BoundingAverage));
    }

    #[test]
    fn config_errors() {
        let mut c = PipelineConfig::default();
        assert!(c.apply_file_text("bogus = 1").is_err());
        assert!(c.apply_file_text("no equals sign").is_err());
        assert!(c.apply_file_text("level = abc").is_err());
        c.level = 1.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn orders() {
        let o = parse_order("1,0,0,0,1,1", 12).unwrap();
        assert_eq!((o.p, o.seasonal_d, o.seasonal_q, o.period), (1, 1, 1, 12));
        assert!(parse_order("1,0,0", 12).is_err());
        assert!(parse_order("1,0,x,0,1,1", 12).is_err());
        assert!(parse_order("0,0,0,0,1,1", 1).is_err());
    }
}
