//! Corpus ingestion and synthetic code-word dataset construction.

mod document;
mod enron;
pub mod fixture;
mod langid;
mod lexicon;
mod reddit;
mod sample;
mod substitute;

use thiserror::Error;

pub use document::{extract_sentences, is_word_token, tokenize_with_spans, DocumentSource, RawDocument, Sentence};
pub use enron::{
    build_from_candidates, collect_candidates, length_filter, sample_id, synthesize_detection_dataset, DetectionDataset,
};
pub use langid::{identify_language, trigrams, LanguageGuess, LanguageIdentifier, TrigramLanguageId, UNDETERMINED};
pub use lexicon::{parse_noun_list, partition_lexicon, NounLexicon};
pub use reddit::{build_balanced_pair_dataset, PairConfig};
pub use sample::{read_jsonl, write_jsonl, LabeledSample, SampleSource, Split, SynthesisConfig};
pub use substitute::{
    first_noun_index, match_case, revert_tokens, substitute_codewords, substitute_first_noun, CodewordTable,
    SubstitutionRecord, SubstitutionRule,
};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("need at least 3 distinct nouns, got {0}")]
    TooFewNouns(usize),
    #[error("sentence is not tagged")]
    Untagged,
    #[error("not a candidate: sentence has no noun")]
    NotACandidate,
    #[error("no replacement different from {0:?} in the lexicon partition")]
    NoDistinctReplacement(String),
    #[error("invalid code-word table: {0}")]
    InvalidCodewords(String),
    #[error("candidate pool exhausted: {} split needs {needed} sentences, only {available} left", split.as_str())]
    PoolExhausted { split: Split, needed: usize, available: usize },
    #[error(
        "input exhausted: got {negatives}/{wanted_negatives} negatives and {positives}/{wanted_positives} positives"
    )]
    StreamExhausted { negatives: usize, positives: usize, wanted_negatives: usize, wanted_positives: usize },
    #[error("substitution at token {0} cannot be reverted")]
    Irreversible(usize),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
