//! Optional settings file (TOML, or JSON when the extension is `.json`).
//! Values here sit between command-line flags and built-in defaults.

use std::path::{Path, PathBuf};

use cwb_core::classify::{FinetuneConfig, LogisticConfig, RecurrentConfig};
use serde::Deserialize;

use crate::UserError;

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub sequential: Option<bool>,
    pub data_dir: Option<PathBuf>,
    pub synth: SynthSection,
    pub reddit: RedditSection,
    pub train: TrainSection,
    pub backend: BackendSection,
    pub serve: ServeSection,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub train_size: Option<usize>,
    pub val_size: Option<usize>,
    pub test_size: Option<usize>,
    pub test_positives: Option<usize>,
    pub min_len: Option<usize>,
    pub max_len: Option<usize>,
    pub balance: Option<f64>,
    pub lexicon_ratios: Option<[f64; 3]>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RedditSection {
    pub per_class: Option<usize>,
    pub language: Option<String>,
    pub min_confidence: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub ngram_max: Option<usize>,
    pub min_doc_freq: Option<u32>,
    pub embeddings: Option<PathBuf>,
    pub embedding_dim: Option<usize>,
    pub logistic: Option<LogisticConfig>,
    pub recurrent: Option<RecurrentConfig>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendSection {
    pub endpoint: Option<String>,
    pub finetune: Option<FinetuneConfig>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeSection {
    pub host: Option<String>,
    pub port: Option<u16>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UserError::new(format!("cannot read config {}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|x| x.eq_ignore_ascii_case("json")) {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        Ok(parsed.map_err(|e| UserError::new(format!("invalid config {}: {e}", path.display())))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_and_json_agree() {
        let dir = tempfile::tempdir().unwrap();
        let t = dir.path().join("c.toml");
        let j = dir.path().join("c.json");
        std::fs::write(&t, "seed = 7\n[synth]\ntrain_size = 10\n[train.recurrent]\nhidden = 4\n").unwrap();
        std::fs::write(&j, r#"{"seed": 7, "synth": {"train_size": 10}, "train": {"recurrent": {"hidden": 4}}}"#)
            .unwrap();
        let a = FileConfig::load(&t).unwrap();
        assert_eq!(a, FileConfig::load(&j).unwrap());
        assert_eq!(a.seed, Some(7));
        assert_eq!(a.synth.train_size, Some(10));
        assert_eq!(a.train.recurrent.unwrap().hidden, 4);
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let t = dir.path().join("c.toml");
        std::fs::write(&t, "[synth]\ntrain_sz = 10\n").unwrap();
        let err = FileConfig::load(&t).unwrap_err();
        assert!(err.downcast_ref::<UserError>().is_some());
    }
}
