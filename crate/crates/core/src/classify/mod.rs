//! The classifier ladder: random baseline, count and TF-IDF features with
//! logistic regression, a bidirectional LSTM over pretrained embeddings,
//! and a client for an out-of-process transformer backend.

mod adam;
pub mod backend;
mod embeddings;
mod logistic;
mod recurrent;
mod vocab;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adam::{Adam, AdamConfig};
pub use backend::{BackendClient, BackendHandle, Endpoint, FinetuneConfig};
pub use embeddings::{load_embeddings, parse_embeddings, train_cooccurrence_embeddings, EmbeddingTable, OovPolicy};
pub use logistic::{objective, objective_gradient, train_logistic, LinearModel, LogisticConfig};
pub use recurrent::{train_recurrent, Layout, RecurrentConfig, RecurrentModel, UNK};
pub use vocab::{
    bow_vectorize, fit_vocabulary, ngrams, tfidf_vectorize, vectorize, vectorize_all, word_tokens, SparseVector,
    VocabularyIndex, Weighting,
};

use crate::corpus::LabeledSample;

pub const THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty vocabulary: no n-gram reaches the document-frequency threshold")]
    EmptyVocabulary,
    #[error("training data contains a single class")]
    SingleClass,
    #[error("vocabulary mismatch: column {column} but the model has {features} weights")]
    VocabularyMismatch { column: usize, features: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("embeddings: {0}")]
    Embeddings(String),
    #[error("backend transport: {0}")]
    Transport(String),
    #[error("backend protocol: {0}")]
    Protocol(String),
    #[error("backend: {0}")]
    Backend(String),
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub epochs: usize,
    pub seed: u64,
    pub stopped_early: bool,
    pub best_val_loss: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub score: f64,
    pub label: u8,
}

impl Prediction {
    pub fn new(id: impl Into<String>, score: f64) -> Self {
        Prediction { id: id.into(), score, label: u8::from(score >= THRESHOLD) }
    }
}

/// A trained in-process model together with its feature pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Linear { vocabulary: VocabularyIndex, weighting: Weighting, model: LinearModel },
    Recurrent { model: RecurrentModel },
}

impl Model {
    pub fn score(&self, text: &str) -> Result<f64, ClassifyError> {
        match self {
            Model::Linear { vocabulary, weighting, model } => {
                model.probability(&vectorize(text, vocabulary, *weighting))
            }
            Model::Recurrent { model } => model.probability(text),
        }
    }

    pub fn report(&self) -> &TrainReport {
        match self {
            Model::Linear { model, .. } => &model.report,
            Model::Recurrent { model } => &model.report,
        }
    }

    /// Restores lookup tables skipped by serialization.
    pub fn after_load(&mut self) {
        if let Model::Recurrent { model } = self {
            model.rebuild_index();
        }
    }
}

pub fn predict(model: &Model, sample: &LabeledSample) -> Result<Prediction, ClassifyError> {
    Ok(Prediction::new(sample.id.clone(), model.score(&sample.text)?))
}

pub fn predict_all(
    model: &Model,
    samples: &[LabeledSample],
    execution: crate::Execution,
) -> Result<Vec<Prediction>, ClassifyError> {
    crate::exec::map(execution, samples, |s| predict(model, s)).into_iter().collect()
}

/// Uniform score per sample; the label is the score thresholded at 0.5,
/// so each label is a fair coin.
pub fn random_baseline(samples: &[LabeledSample], seed: u64) -> Vec<Prediction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    samples.iter().map(|s| Prediction::new(s.id.clone(), rng.gen::<f64>())).collect()
}

/// Fits the vocabulary on the training texts and trains logistic regression
/// on `Counts` (bag of words) or `TfIdf` features.
pub fn train_linear(
    train: &[LabeledSample],
    val: &[LabeledSample],
    weighting: Weighting,
    ngram_range: (usize, usize),
    min_doc_freq: u32,
    cfg: &LogisticConfig,
    execution: crate::Execution,
) -> Result<Model, ClassifyError> {
    let texts: Vec<String> = train.iter().map(|s| s.text.clone()).collect();
    let vocabulary = fit_vocabulary(&texts, ngram_range, min_doc_freq, execution)?;
    let xs = vectorize_all(&texts, &vocabulary, weighting, execution);
    let ys: Vec<u8> = train.iter().map(|s| s.label).collect();
    let val_texts: Vec<String> = val.iter().map(|s| s.text.clone()).collect();
    let vx = vectorize_all(&val_texts, &vocabulary, weighting, execution);
    let vy: Vec<u8> = val.iter().map(|s| s.label).collect();
    let validation = if val.is_empty() { None } else { Some((&vx[..], &vy[..])) };
    let model = train_logistic(&xs, &ys, validation, vocabulary.len(), cfg, execution)?;
    Ok(Model::Linear { vocabulary, weighting, model })
}
