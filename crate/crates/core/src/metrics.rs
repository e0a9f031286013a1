//! Accuracy, per-class and macro precision/recall/F1 for the binary
//! code-word task (class 1 = code word).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no predictions to evaluate")]
    Empty,
    #[error("{preds} predictions for {golds} gold labels")]
    LengthMismatch { preds: usize, golds: usize },
    #[error("label {0} is not 0 or 1")]
    InvalidLabel(u8),
    #[error("prediction {index} is for {pred:?} but gold sample is {gold:?}")]
    IdMismatch { index: usize, pred: String, gold: String },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn n(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// The same counts seen with class 0 as the positive class.
    pub fn flipped(&self) -> Self {
        ConfusionMatrix { tp: self.tn, fp: self.fn_, tn: self.tp, fn_: self.fp }
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.n() as f64
    }
}

pub fn confusion(preds: &[u8], golds: &[u8]) -> Result<ConfusionMatrix, MetricsError> {
    if preds.len() != golds.len() {
        return Err(MetricsError::LengthMismatch { preds: preds.len(), golds: golds.len() });
    }
    if preds.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &g) in preds.iter().zip(golds) {
        match (p, g) {
            (1, 1) => cm.tp += 1,
            (1, 0) => cm.fp += 1,
            (0, 0) => cm.tn += 1,
            (0, 1) => cm.fn_ += 1,
            (bad, 0 | 1) | (_, bad) => return Err(MetricsError::InvalidLabel(bad)),
        }
    }
    Ok(cm)
}

/// Precision, recall and F1 for one class. A zero denominator yields 0
/// and sets the matching flag.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

/// F1 as the harmonic mean of `p` and `r`; 0 when both are 0.
pub fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn class_metrics(cm: &ConfusionMatrix, class: u8) -> ClassMetrics {
    let cm = if class == 1 { *cm } else { cm.flipped() };
    let (precision, precision_undefined) = ratio(cm.tp, cm.tp + cm.fp);
    let (recall, recall_undefined) = ratio(cm.tp, cm.tp + cm.fn_);
    ClassMetrics {
        precision,
        recall,
        f1: f1(precision, recall),
        precision_undefined,
        recall_undefined,
        f1_undefined: precision + recall == 0.0,
    }
}

pub fn macro_metrics(cm: &ConfusionMatrix) -> (f64, f64, f64) {
    let (c0, c1) = (class_metrics(cm, 0), class_metrics(cm, 1));
    ((c0.precision + c1.precision) / 2.0, (c0.recall + c1.recall) / 2.0, (c0.f1 + c1.f1) / 2.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub p0: f64,
    pub r0: f64,
    pub f10: f64,
    pub p1: f64,
    pub r1: f64,
    pub f11: f64,
    pub macro_p: f64,
    pub macro_r: f64,
    pub macro_f1: f64,
    pub n: u64,
    pub prevalence: f64,
    pub confusion: ConfusionMatrix,
    /// Metrics that hit a zero denominator, e.g. `"p1"`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undefined: Vec<String>,
}

pub const TSV_COLUMNS: [&str; 12] =
    ["accuracy", "p0", "r0", "f10", "p1", "r1", "f11", "macro_p", "macro_r", "macro_f1", "n", "prevalence"];

impl MetricReport {
    pub fn from_confusion(cm: ConfusionMatrix) -> Self {
        let (c0, c1) = (class_metrics(&cm, 0), class_metrics(&cm, 1));
        let (macro_p, macro_r, macro_f1) = macro_metrics(&cm);
        let mut undefined = Vec::new();
        for (suffix, c) in [("0", &c0), ("1", &c1)] {
            for (name, flag) in [("p", c.precision_undefined), ("r", c.recall_undefined), ("f1", c.f1_undefined)] {
                if flag {
                    undefined.push(format!("{name}{suffix}"));
                }
            }
        }
        MetricReport {
            accuracy: cm.accuracy(),
            p0: c0.precision,
            r0: c0.recall,
            f10: c0.f1,
            p1: c1.precision,
            r1: c1.recall,
            f11: c1.f1,
            macro_p,
            macro_r,
            macro_f1,
            n: cm.n(),
            prevalence: (cm.tp + cm.fn_) as f64 / cm.n() as f64,
            confusion: cm,
            undefined,
        }
    }

    fn values(&self) -> [f64; 12] {
        [
            self.accuracy,
            self.p0,
            self.r0,
            self.f10,
            self.p1,
            self.r1,
            self.f11,
            self.macro_p,
            self.macro_r,
            self.macro_f1,
            self.n as f64,
            self.prevalence,
        ]
    }

    pub fn tsv_header() -> String {
        TSV_COLUMNS.join("\t")
    }

    /// Full-precision TSV row in [`TSV_COLUMNS`] order.
    pub fn tsv_row(&self) -> String {
        let v = self.values();
        let mut out = String::new();
        for (i, x) in v.iter().enumerate() {
            if i > 0 {
                out.push('\t');
            }
            if i == 10 {
                let _ = write!(out, "{}", self.n);
            } else {
                let _ = write!(out, "{x}");
            }
        }
        out
    }

    /// Cells of the published table layout: accuracy, macro precision,
    /// macro recall, macro F1, C1 precision, C1 recall.
    pub fn table_cells(&self) -> [f64; 6] {
        [self.accuracy, self.macro_p, self.macro_r, self.macro_f1, self.p1, self.r1]
    }
}

pub const TABLE_HEADER: [&str; 7] =
    ["Model", "Accuracy", "Precision", "Recall", "F1-Score", "C1 Precision", "C1 Recall"];

/// Renders rows as an aligned text table rounded to two decimals.
pub fn render_table(rows: &[(String, MetricReport)]) -> String {
    let name_w = rows.iter().map(|(n, _)| n.chars().count()).chain([TABLE_HEADER[0].len()]).max().unwrap_or(5);
    let mut out = format!("{:<name_w$}", TABLE_HEADER[0]);
    for h in &TABLE_HEADER[1..] {
        let _ = write!(out, "  {h:>w$}", w = h.len().max(4));
    }
    out.push('\n');
    for (name, r) in rows {
        let _ = write!(out, "{name:<name_w$}");
        for (h, v) in TABLE_HEADER[1..].iter().zip(r.table_cells()) {
            let _ = write!(out, "  {v:>w$.2}", w = h.len().max(4));
        }
        out.push('\n');
    }
    out
}

pub fn full_report(preds: &[u8], golds: &[u8]) -> Result<MetricReport, MetricsError> {
    Ok(MetricReport::from_confusion(confusion(preds, golds)?))
}

/// Evaluates predictions against samples aligned by position; ids must match.
pub fn report_for(
    predictions: &[crate::classify::Prediction],
    samples: &[crate::corpus::LabeledSample],
) -> Result<MetricReport, MetricsError> {
    if predictions.len() != samples.len() {
        return Err(MetricsError::LengthMismatch { preds: predictions.len(), golds: samples.len() });
    }
    for (index, (p, s)) in predictions.iter().zip(samples).enumerate() {
        if p.id != s.id {
            return Err(MetricsError::IdMismatch { index, pred: p.id.clone(), gold: s.id.clone() });
        }
    }
    let preds: Vec<u8> = predictions.iter().map(|p| p.label).collect();
    let golds: Vec<u8> = samples.iter().map(|s| s.label).collect();
    full_report(&preds, &golds)
}
