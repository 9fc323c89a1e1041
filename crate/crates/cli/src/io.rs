//! Input loading and atomic output writes.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use boxfill::ingest::{aggregate_monthly, parse_daily_csv, read_monthly_csv, DayDivisor, MonthlySeries};
use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::{CliError, Result};

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a half-written file.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    fill(tmp.as_file_mut()).map_err(|e| CliError::io(path, e))?;
    tmp.as_file_mut().flush().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    write_atomic(path, |w| w.write_all(text.as_bytes()))
}

/// Atomic write for writers that report their own error type.
pub fn write_csv<E>(path: &Path, fill: impl FnOnce(&mut dyn Write) -> std::result::Result<(), E>) -> Result<()>
where
    E: Into<Box<dyn std::error::Error + Send + Sync>>,
{
    write_atomic(path, |w| fill(w).map_err(std::io::Error::other))
}

/// Input file layout, told apart by its header line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    Daily,
    Monthly,
}

pub fn detect_kind(header: &str) -> Option<InputKind> {
    let fields: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    match fields[..] {
        ["date", "value"] => Some(InputKind::Daily),
        ["year", "month", "value", "observed"] => Some(InputKind::Monthly),
        _ => None,
    }
}

/// Loads a daily `date,value` file (aggregated to monthly means) or a
/// monthly `year,month,value,observed` file.
pub fn load_monthly(path: &Path, divisor: DayDivisor) -> Result<MonthlySeries> {
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "series".into());
    let open = || File::open(path).map_err(|e| CliError::io(path, e));
    let mut header = String::new();
    BufReader::new(open()?)
        .read_line(&mut header)
        .map_err(|e| CliError::io(path, e))?;
    match detect_kind(&header) {
        Some(InputKind::Daily) => {
            let records = parse_daily_csv(BufReader::new(open()?))?;
            Ok(aggregate_monthly(&records, divisor, &label)?)
        }
        Some(InputKind::Monthly) => Ok(read_monthly_csv(BufReader::new(open()?), &label)?),
        None => Err(CliError::Config(format!(
            "{}: unrecognized header `{}` (expected `date,value` or `year,month,value,observed`)",
            path.display(),
            header.trim()
        ))),
    }
}
