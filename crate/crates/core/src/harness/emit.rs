//! CSV and JSON writers for trade-off curves.
//!
//! CSV columns: `algorithm,iteration,par_db_pXX,pinc_db_pXX,objective_mean,bound_db`
//! with XX the configured percentile and floats at 6 decimals; `bound_db`
//! is `nan` when no bound applies.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, TradeoffCurve};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    /// `json` for a `.json` extension, CSV otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => OutputFormat::Json,
            _ => OutputFormat::Csv,
        }
    }
}

/// JSON result file: the curve plus the configuration that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub version: String,
    pub config: Option<ExperimentConfig>,
    /// How the percentiles were formed.
    pub pooling: String,
    pub curve: TradeoffCurve,
}

fn pooling_note(curve: &TradeoffCurve) -> String {
    format!(
        "nearest-rank percentile {}; {} PAR samples and {} PINC samples per point",
        curve.percentile, curve.par_samples, curve.pinc_samples
    )
}

pub fn csv_header(pct: f64) -> String {
    format!("algorithm,iteration,par_db_p{pct},pinc_db_p{pct},objective_mean,bound_db")
}

pub fn write_csv(curve: &TradeoffCurve, mut out: impl Write) -> Result<(), std::io::Error> {
    writeln!(out, "{}", csv_header(curve.percentile))?;
    let bound = curve.bound_db.unwrap_or(f64::NAN);
    for p in &curve.points {
        writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{:.6}",
            p.algorithm, p.iteration, p.par_db, p.pinc_db, p.objective_mean, bound
        )?;
    }
    out.flush()
}

pub fn write_json(
    curve: &TradeoffCurve,
    config: Option<&ExperimentConfig>,
    out: impl Write,
) -> Result<()> {
    let doc = ResultDocument {
        version: crate::VERSION.to_string(),
        config: config.cloned(),
        pooling: pooling_note(curve),
        curve: curve.clone(),
    };
    serde_json::to_writer_pretty(out, &doc)?;
    Ok(())
}

pub fn read_json(path: &Path) -> Result<ResultDocument> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

/// Writes `curve` to `path`, replacing any existing file. JSON output
/// echoes `config` when given.
pub fn emit_results(
    curve: &TradeoffCurve,
    config: Option<&ExperimentConfig>,
    path: &Path,
    format: OutputFormat,
) -> Result<()> {
    if curve.points.is_empty() {
        return Err(Error::Config("refusing to write an empty curve".into()));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        OutputFormat::Csv => write_csv(curve, &mut out).map_err(|e| Error::io(path, e)),
        OutputFormat::Json => {
            write_json(curve, config, &mut out)?;
            out.flush().map_err(|e| Error::io(path, e))
        }
    }
}
