use cwb_core::classify::Prediction;
use cwb_core::corpus::LabeledSample;
use cwb_core::metrics::{report_for, MetricReport, MetricsError};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunPrediction {
    pub sample_id: String,
    pub score: f64,
    pub label: u8,
    pub gold: u8,
    pub text: String,
}

/// An evaluated model run: the report plus every per-sample prediction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoredRun {
    pub id: String,
    pub model: String,
    pub dataset: String,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    pub report: MetricReport,
    pub predictions: Vec<RunPrediction>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub id: String,
    pub model: String,
    pub dataset: String,
    pub created_at: u64,
    pub n: u64,
    pub macro_f1: f64,
}

impl StoredRun {
    /// Pairs predictions with their samples; ids must line up one to one.
    pub fn new(
        id: impl Into<String>,
        model: impl Into<String>,
        dataset: impl Into<String>,
        created_at: u64,
        samples: &[LabeledSample],
        predictions: &[Prediction],
    ) -> Result<Self, MetricsError> {
        let report = report_for(predictions, samples)?;
        let predictions = samples
            .iter()
            .zip(predictions)
            .map(|(s, p)| RunPrediction {
                sample_id: s.id.clone(),
                score: p.score,
                label: p.label,
                gold: s.label,
                text: s.text.clone(),
            })
            .collect();
        Ok(StoredRun { id: id.into(), model: model.into(), dataset: dataset.into(), created_at, report, predictions })
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary {
            id: self.id.clone(),
            model: self.model.clone(),
            dataset: self.dataset.clone(),
            created_at: self.created_at,
            n: self.report.n,
            macro_f1: self.report.macro_f1,
        }
    }

    pub fn prediction(&self, sample_id: &str) -> Option<&RunPrediction> {
        self.predictions.iter().find(|p| p.sample_id == sample_id)
    }

    /// Predictions with `score >= min_score`, highest score first; equal
    /// scores keep their original order.
    pub fn detections(&self, min_score: f64) -> Vec<&RunPrediction> {
        let mut out: Vec<&RunPrediction> = self.predictions.iter().filter(|p| p.score >= min_score).collect();
        out.sort_by(|a, b| b.score.total_cmp(&a.score));
        out
    }
}
