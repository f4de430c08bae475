//! Report rows, summaries and JSON/CSV output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Measurement, TrialConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Grunbaum,
    MinkradSupport,
    MinkradRadial,
    Projection,
    Section,
    Functional,
    Theorem,
    Chain,
}

impl CheckKind {
    pub fn needs_gamma(self) -> bool {
        matches!(self, Self::Functional | Self::Theorem | Self::Chain)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial_id: usize,
    pub check: CheckKind,
    pub n: usize,
    pub k: usize,
    pub gamma: Option<f64>,
    /// Orthonormal basis of E.
    pub frame: Vec<Vec<f64>>,
    pub theta: Vec<f64>,
    pub ratio: f64,
    pub bound: f64,
    pub margin: f64,
    /// f, affinized, cone.
    pub chain: Option<[f64; 3]>,
    /// (Monte Carlo - exact) / σ for the instance's volume or integral.
    pub mc_delta: Option<f64>,
    pub seed: u64,
}

impl TrialRow {
    pub(crate) fn new(trial_id: usize, check: CheckKind, cfg: &TrialConfig, m: &Measurement, mc_delta: Option<f64>, seed: u64) -> Self {
        Self {
            trial_id,
            check,
            n: cfg.n,
            k: m.frame.dim(),
            gamma: if check.needs_gamma() { cfg.gamma } else { None },
            frame: m.frame.basis().iter().map(|b| b.iter().copied().collect()).collect(),
            theta: m.theta.iter().copied().collect(),
            ratio: m.ratio,
            bound: m.bound,
            margin: m.margin,
            chain: m.chain.map(|c| c.as_array()),
            mc_delta,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub trial_id: usize,
    pub seed: u64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub trials: usize,
    pub skipped: usize,
    pub min_margin: Option<f64>,
    pub argmin: Option<usize>,
    pub violations: usize,
    pub runtime_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: CheckKind,
    pub config: TrialConfig,
    pub rows: Vec<TrialRow>,
    pub skipped: Vec<SkipRecord>,
    pub summary: Summary,
}

impl VerificationReport {
    pub fn new(check: CheckKind, config: TrialConfig, rows: Vec<TrialRow>, skipped: Vec<SkipRecord>, runtime_secs: f64) -> Self {
        let argmin = rows.iter().min_by(|a, b| a.margin.total_cmp(&b.margin)).map(|r| r.trial_id);
        let min_margin = rows.iter().map(|r| r.margin).min_by(f64::total_cmp);
        let violations = rows.iter().filter(|r| r.margin < -config.tolerance).count();
        let summary = Summary { trials: rows.len(), skipped: skipped.len(), min_margin, argmin, violations, runtime_secs };
        Self { check, config, rows, skipped, summary }
    }

    pub fn passed(&self) -> bool {
        self.summary.violations == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Serialize)]
struct CsvRow {
    trial_id: usize,
    n: usize,
    k: usize,
    gamma: Option<f64>,
    ratio: f64,
    bound: f64,
    margin: f64,
    mc_delta: Option<f64>,
    seed: u64,
}

const CSV_HEADER: [&str; 9] = ["trial_id", "n", "k", "gamma", "ratio", "bound", "margin", "mc_delta", "seed"];

pub fn emit_report(report: &VerificationReport, path: &Path, format: ReportFormat) -> Result<()> {
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    let file = File::create(path).map_err(io)?;
    let mut out = BufWriter::new(file);
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, report)?;
            out.write_all(b"\n").map_err(io)?;
        }
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut out);
            w.write_record(CSV_HEADER)?;
            for r in &report.rows {
                w.serialize(CsvRow {
                    trial_id: r.trial_id,
                    n: r.n,
                    k: r.k,
                    gamma: r.gamma,
                    ratio: r.ratio,
                    bound: r.bound,
                    margin: r.margin,
                    mc_delta: r.mc_delta,
                    seed: r.seed,
                })?;
            }
            w.flush().map_err(io)?;
        }
    }
    out.flush().map_err(io)
}
