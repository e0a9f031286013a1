use serde::{Deserialize, Serialize};

use super::{
    extract_sentences, length_filter, sample_id, substitute_codewords, CodewordTable, LabeledSample,
    LanguageIdentifier, RawDocument, SampleSource, Sentence, Split, SynthError, SynthesisConfig,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PairConfig {
    pub negatives: usize,
    pub positives: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub language: String,
    pub min_confidence: f64,
}

impl Default for PairConfig {
    fn default() -> Self {
        PairConfig {
            negatives: 600,
            positives: 600,
            min_len: 5,
            max_len: 20,
            language: "en".into(),
            min_confidence: 0.5,
        }
    }
}

impl PairConfig {
    pub fn per_class(n: usize) -> Self {
        PairConfig { negatives: n, positives: n, ..Default::default() }
    }

    fn length_config(&self) -> SynthesisConfig {
        SynthesisConfig { min_len: self.min_len, max_len: self.max_len, ..Default::default() }
    }
}

fn qualifying<'a, I>(
    docs: I,
    cfg: &'a PairConfig,
    lang: &'a dyn LanguageIdentifier,
) -> impl Iterator<Item = Sentence> + 'a
where
    I: IntoIterator<Item = RawDocument>,
    I::IntoIter: 'a,
{
    let window = cfg.length_config();
    docs.into_iter().flat_map(|d| extract_sentences(&d)).filter(move |s| {
        if !length_filter(s, &window) {
            return false;
        }
        let guess = lang.identify(&s.text);
        guess.lang == cfg.language && guess.confidence >= cfg.min_confidence
    })
}

/// Builds a labeled set from the first qualifying negative sentences and the
/// first qualifying target-mentioning sentences, every mention replaced by
/// its code word. Output alternates negative and positive samples.
pub fn build_balanced_pair_dataset<N, P>(
    negatives: N,
    positives: P,
    table: &CodewordTable,
    cfg: &PairConfig,
    lang: &dyn LanguageIdentifier,
) -> Result<Vec<LabeledSample>, SynthError>
where
    N: IntoIterator<Item = RawDocument>,
    P: IntoIterator<Item = RawDocument>,
{
    let neg: Vec<LabeledSample> = qualifying(negatives, cfg, lang)
        .take(cfg.negatives)
        .map(|s| LabeledSample {
            id: sample_id(&s),
            text: s.text,
            label: 0,
            substitutions: Vec::new(),
            source: SampleSource::RedditDrugs,
            split: Split::Test,
        })
        .collect();
    let pos: Vec<LabeledSample> = qualifying(positives, cfg, lang)
        .filter(|s| table.mentions(s))
        .take(cfg.positives)
        .map(|s| {
            let (sub, records) = substitute_codewords(&s, table);
            LabeledSample {
                id: sample_id(&s),
                text: sub.text,
                label: 1,
                substitutions: records,
                source: SampleSource::RedditDrugs,
                split: Split::Test,
            }
        })
        .collect();
    if neg.len() < cfg.negatives || pos.len() < cfg.positives {
        return Err(SynthError::StreamExhausted {
            negatives: neg.len(),
            positives: pos.len(),
            wanted_negatives: cfg.negatives,
            wanted_positives: cfg.positives,
        });
    }
    let mut out = Vec::with_capacity(neg.len() + pos.len());
    let mut n = neg.into_iter();
    let mut p = pos.into_iter();
    loop {
        match (n.next(), p.next()) {
            (None, None) => break,
            (a, b) => out.extend(a.into_iter().chain(b)),
        }
    }
    Ok(out)
}
