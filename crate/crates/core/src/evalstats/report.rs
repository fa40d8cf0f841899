//! Flat report rows shared by the CSV and JSON outputs.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{f1, f1_ci, precision, precision_ci, recall, recall_ci, Confusion, DEFAULT_MASS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub spec: String,
    /// Similarity kind or learner name.
    pub method: String,
    /// `K` for top-K rows, fold count for microaveraged supervised rows.
    pub k_or_fold: u64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub precision: f64,
    pub p_lo: f64,
    pub p_hi: f64,
    pub recall: f64,
    pub r_lo: f64,
    pub r_hi: f64,
    pub f1: f64,
    pub f1_lo: f64,
    pub f1_hi: f64,
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntervalSettings {
    pub lambda: f64,
    pub mass: f64,
    pub f1_samples: usize,
}

impl Default for IntervalSettings {
    fn default() -> Self {
        Self { lambda: super::JEFFREYS, mass: DEFAULT_MASS, f1_samples: super::DEFAULT_F1_SAMPLES }
    }
}

impl ReportRow {
    pub fn from_confusion(
        spec: impl Into<String>,
        method: impl Into<String>,
        k_or_fold: u64,
        c: &Confusion,
        auc: Option<f64>,
        settings: &IntervalSettings,
        seed: u64,
    ) -> Self {
        let pci = precision_ci(c, settings.lambda, settings.mass);
        let rci = recall_ci(c, settings.lambda, settings.mass);
        let fci = f1_ci(c, settings.lambda, settings.mass, settings.f1_samples, seed);
        ReportRow {
            spec: spec.into(),
            method: method.into(),
            k_or_fold,
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            tn: c.tn,
            precision: precision(c).value,
            p_lo: pci.lo,
            p_hi: pci.hi,
            recall: recall(c).value,
            r_lo: rci.lo,
            r_hi: rci.hi,
            f1: f1(c).value,
            f1_lo: fci.lo,
            f1_hi: fci.hi,
            auc,
        }
    }

    pub fn confusion(&self) -> Confusion {
        Confusion::new(self.tp, self.fp, self.fn_, self.tn)
    }
}

/// Writes rows as CSV with a header; a missing AUC is an empty field.
pub fn write_csv<W: Write>(rows: &[ReportRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "spec", "method", "k_or_fold", "tp", "fp", "fn", "tn", "precision", "p_lo", "p_hi", "recall",
            "r_lo", "r_hi", "f1", "f1_lo", "f1_hi", "auc",
        ])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> csv::Result<Vec<ReportRow>> {
    csv::Reader::from_reader(input).deserialize().collect()
}
