//! Synthetic code-word detection data from an email collection.
//!
//! Sentences of the right length that contain a noun form a candidate pool.
//! Positives have their first noun swapped for a noun from the split's own
//! partition of the replacement lexicon; negatives are left untouched.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    extract_sentences, first_noun_index, substitute_first_noun, LabeledSample, NounLexicon, RawDocument, SampleSource,
    Sentence, Split, SynthError, SynthesisConfig,
};
use crate::exec::{self, Execution};
use crate::tagger::{pos_tag, Tagger};

/// True iff the word count (alphanumeric tokens only) lies in the inclusive
/// `[min_len, max_len]` window.
pub fn length_filter(sentence: &Sentence, cfg: &SynthesisConfig) -> bool {
    let n = sentence.word_count();
    cfg.min_len <= n && n <= cfg.max_len
}

/// Stable sample identity derived from the sentence provenance.
pub fn sample_id(sentence: &Sentence) -> String {
    format!("{}:{}-{}", sentence.doc_id, sentence.char_span.0, sentence.char_span.1)
}

/// Tagged sentences passing the length filter and containing a noun, in
/// document order, with exact-duplicate texts removed (first occurrence
/// kept).
pub fn collect_candidates(
    docs: &[RawDocument],
    cfg: &SynthesisConfig,
    tagger: &dyn Tagger,
    execution: Execution,
) -> Vec<Sentence> {
    let per_doc = exec::map(execution, docs, |doc| {
        extract_sentences(doc)
            .into_iter()
            .filter(|s| length_filter(s, cfg))
            .map(|s| pos_tag(&s, tagger))
            .filter(|s| matches!(first_noun_index(s), Ok(Some(_))))
            .collect::<Vec<_>>()
    });
    let mut seen = HashSet::new();
    per_doc.into_iter().flatten().filter(|s| seen.insert(s.text.clone())).collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectionDataset {
    pub train: Vec<LabeledSample>,
    pub val: Vec<LabeledSample>,
    pub test: Vec<LabeledSample>,
}

impl DetectionDataset {
    pub fn split(&self, split: Split) -> &[LabeledSample] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn all(&self) -> impl Iterator<Item = &LabeledSample> {
        self.train.iter().chain(&self.val).chain(&self.test)
    }
}

pub fn synthesize_detection_dataset(
    docs: &[RawDocument],
    lexicon: &NounLexicon,
    cfg: &SynthesisConfig,
    tagger: &dyn Tagger,
    execution: Execution,
) -> Result<DetectionDataset, SynthError> {
    cfg.validate()?;
    let candidates = collect_candidates(docs, cfg, tagger, execution);
    build_from_candidates(candidates, lexicon, cfg)
}

/// The sequential, seeded half of synthesis: pool sampling, split
/// assignment, substitution and shuffling.
pub fn build_from_candidates(
    mut pool: Vec<Sentence>,
    lexicon: &NounLexicon,
    cfg: &SynthesisConfig,
) -> Result<DetectionDataset, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    pool.shuffle(&mut rng);

    let mut available = pool.len();
    for split in Split::ALL {
        let need = cfg.size(split);
        if available < need {
            return Err(SynthError::PoolExhausted { split, needed: need, available });
        }
        available -= need;
    }

    let mut remaining = pool.into_iter();
    let mut out = DetectionDataset::default();
    for split in Split::ALL {
        let n = cfg.size(split);
        let positives = cfg.positives(split);
        let mut samples = Vec::with_capacity(n);
        for (i, sentence) in remaining.by_ref().take(n).enumerate() {
            let id = sample_id(&sentence);
            let sample = if i < positives {
                let (sub, record) = substitute_first_noun(&sentence, lexicon.part(split), &mut rng)?;
                LabeledSample {
                    id,
                    text: sub.text,
                    label: 1,
                    substitutions: vec![record],
                    source: SampleSource::EnronSynth,
                    split,
                }
            } else {
                LabeledSample {
                    id,
                    text: sentence.text,
                    label: 0,
                    substitutions: Vec::new(),
                    source: SampleSource::EnronSynth,
                    split,
                }
            };
            samples.push(sample);
        }
        samples.shuffle(&mut rng);
        match split {
            Split::Train => out.train = samples,
            Split::Val => out.val = samples,
            Split::Test => out.test = samples,
        }
    }
    Ok(out)
}
