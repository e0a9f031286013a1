use std::io::{self, BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{SubstitutionRecord, SynthError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSource {
    EnronSynth,
    RedditDrugs,
    User,
}

/// One sentence with its binary code-word label and substitution provenance.
///
/// Field order is the serialized key order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub id: String,
    pub text: String,
    pub label: u8,
    pub substitutions: Vec<SubstitutionRecord>,
    pub source: SampleSource,
    pub split: Split,
}

impl LabeledSample {
    pub fn is_positive(&self) -> bool {
        self.label == 1
    }

    /// Label/provenance coupling: label 1 exactly when substitutions exist.
    pub fn is_consistent(&self) -> bool {
        (self.label == 1) == !self.substitutions.is_empty() && self.label <= 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisConfig {
    pub min_len: usize,
    pub max_len: usize,
    pub train_size: usize,
    pub val_size: usize,
    pub test_size: usize,
    pub test_positives: usize,
    /// Positive fraction for the train and validation splits.
    pub balance: f64,
    pub rng_seed: u64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            min_len: 5,
            max_len: 20,
            train_size: 48_000,
            val_size: 6_000,
            test_size: 6_000,
            test_positives: 400,
            balance: 0.5,
            rng_seed: 0,
        }
    }
}

impl SynthesisConfig {
    /// The small configuration used for quick local runs and CI.
    pub fn desk() -> Self {
        SynthesisConfig { train_size: 2_000, val_size: 500, test_size: 500, test_positives: 25, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidConfig(m.to_string()));
        if self.min_len == 0 || self.min_len > self.max_len {
            return bad("length window must satisfy 0 < min_len <= max_len");
        }
        if self.train_size == 0 || self.val_size == 0 || self.test_size == 0 {
            return bad("split sizes must be positive");
        }
        if self.test_positives > self.test_size {
            return bad("test_positives exceeds test_size");
        }
        if !(0.0..=1.0).contains(&self.balance) {
            return bad("balance must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn size(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train_size,
            Split::Val => self.val_size,
            Split::Test => self.test_size,
        }
    }

    /// Number of positives to emit in `split`.
    pub fn positives(&self, split: Split) -> usize {
        match split {
            Split::Test => self.test_positives,
            other => (self.size(other) as f64 * self.balance).round() as usize,
        }
    }
}

/// Writes one JSON object per line with LF endings.
pub fn write_jsonl<T: Serialize, W: Write>(mut out: W, items: &[T]) -> io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Reads one JSON object per non-blank line.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(input: R) -> Result<Vec<T>, SynthError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| SynthError::Parse { line: i + 1, message: e.to_string() })?);
    }
    Ok(out)
}
