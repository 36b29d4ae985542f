//! CSV and JSON output of summary tables.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::{ExperimentConfig, HaltingRow, SummaryRow, SummaryTable};
use crate::error::{Error, Result};

pub const SUMMARY_HEADER: &str = "algorithm,k,sample_mean,predicted_mean,rescaled_var,predicted_rescaled_var,stderr,trials";
pub const HALTING_HEADER: &str = "algorithm,halt_k,count";
const CONFIG_PREFIX: &str = "# config ";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Parse(format!("unknown format '{other}'"))),
        }
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv<W: Write>(table: &SummaryTable, w: &mut W) -> Result<()> {
    if let Some(cfg) = &table.config {
        writeln!(w, "{CONFIG_PREFIX}{}", serde_json::to_string(cfg)?)?;
    }
    writeln!(w, "{SUMMARY_HEADER}")?;
    for r in &table.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.algorithm,
            r.k,
            num(r.sample_mean),
            num(r.predicted_mean),
            num(r.rescaled_var),
            num(r.predicted_rescaled_var),
            num(r.stderr),
            r.trials
        )?;
    }
    if !table.halting.is_empty() {
        writeln!(w, "{HALTING_HEADER}")?;
        for h in &table.halting {
            let k = h.halt_k.map_or_else(|| "none".to_string(), |k| k.to_string());
            writeln!(w, "{},{},{}", h.algorithm, k, h.count)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct JsonDoc<'a> {
    config: &'a Option<ExperimentConfig>,
    rows: &'a [SummaryRow],
    halting: &'a [HaltingRow],
}

pub fn write_json<W: Write>(table: &SummaryTable, w: &mut W) -> Result<()> {
    let doc = JsonDoc { config: &table.config, rows: &table.rows, halting: &table.halting };
    serde_json::to_writer_pretty(&mut *w, &doc)?;
    writeln!(w)?;
    Ok(())
}

/// Writes `table` to `path`.
pub fn emit(table: &SummaryTable, format: OutputFormat, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        OutputFormat::Csv => write_csv(table, &mut w)?,
        OutputFormat::Json => write_json(table, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

fn field<T: FromStr>(s: &str, line: usize) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Parse(format!("line {line}: bad field '{s}'")))
}

/// Inverse of [`write_csv`].
pub fn parse_csv(text: &str) -> Result<SummaryTable> {
    let mut table = SummaryTable::default();
    let mut section = None;
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        if let Some(cfg) = line.strip_prefix(CONFIG_PREFIX) {
            table.config = Some(serde_json::from_str(cfg)?);
            continue;
        }
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if line == SUMMARY_HEADER || line == HALTING_HEADER {
            section = Some(line == SUMMARY_HEADER);
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        match section {
            Some(true) if f.len() == 8 => table.rows.push(SummaryRow {
                algorithm: field(f[0], ln)?,
                k: field(f[1], ln)?,
                sample_mean: field(f[2], ln)?,
                predicted_mean: field(f[3], ln)?,
                rescaled_var: field(f[4], ln)?,
                predicted_rescaled_var: field(f[5], ln)?,
                stderr: field(f[6], ln)?,
                trials: field(f[7], ln)?,
            }),
            Some(false) if f.len() == 3 => table.halting.push(HaltingRow {
                algorithm: field(f[0], ln)?,
                halt_k: if f[1] == "none" { None } else { Some(field(f[1], ln)?) },
                count: field(f[2], ln)?,
            }),
            _ => return Err(Error::Parse(format!("line {ln}: unexpected '{line}'"))),
        }
    }
    if section.is_none() {
        return Err(Error::Parse("missing header".into()));
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{BetaField, EnsembleSpec};
    use crate::theory::Algorithm;

    fn sample_table() -> SummaryTable {
        let cfg = ExperimentConfig::new(EnsembleSpec::gaussian(10, 20, BetaField::REAL).unwrap(), 3, 5, 42);
        SummaryTable {
            config: Some(cfg),
            rows: vec![
                SummaryRow {
                    algorithm: Algorithm::CgResidual,
                    k: 1,
                    sample_mean: 0.1 + 0.2,
                    predicted_mean: 1.0 / 3.0,
                    rescaled_var: std::f64::consts::PI * 1e-300,
                    predicted_rescaled_var: 1.5,
                    stderr: 6.02214076e23,
                    trials: 5,
                },
                SummaryRow {
                    algorithm: Algorithm::CgError,
                    k: 0,
                    sample_mean: -0.0,
                    predicted_mean: f64::MIN_POSITIVE / 3.0,
                    rescaled_var: f64::MAX,
                    predicted_rescaled_var: 2.0f64.sqrt(),
                    stderr: 0.0,
                    trials: 5,
                },
            ],
            halting: vec![
                HaltingRow { algorithm: Algorithm::CgResidual, halt_k: Some(20), count: 4 },
                HaltingRow { algorithm: Algorithm::CgResidual, halt_k: None, count: 1 },
            ],
            traces: None,
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let mut out = Vec::new();
        write_csv(&SummaryTable::default(), &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), format!("{SUMMARY_HEADER}\n"));
    }

    #[test]
    fn csv_round_trip() {
        let t = sample_table();
        let mut out = Vec::new();
        write_csv(&t, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(!text.contains('\r'));
        let back = parse_csv(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.rows[1].sample_mean.to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn json_has_seed() {
        let dir = std::env::temp_dir().join(format!("krylov-rmt-emit-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.json");
        emit(&sample_table(), OutputFormat::Json, &path).unwrap();
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(v["config"]["seed"], 42);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn io_errors_surface() {
        let err = emit(&sample_table(), OutputFormat::Csv, Path::new("/nonexistent-dir/x.csv")).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }
}
