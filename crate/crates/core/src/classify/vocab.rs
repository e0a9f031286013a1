//! N-gram vocabulary with a document-frequency cutoff, and the count and
//! TF-IDF document representations built on it.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::ClassifyError;
use crate::exec::{self, Execution};

/// Lowercased word tokens (letters, digits, inner apostrophes/hyphens).
pub fn word_tokens(text: &str) -> Vec<String> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"[\p{L}\p{N}]+(?:[-'’][\p{L}\p{N}]+)*").expect("word regex"));
    re.find_iter(text).map(|m| m.as_str().to_lowercase()).collect()
}

/// All n-grams for `n` in `range`, space-joined, in text order.
pub fn ngrams(tokens: &[String], range: (usize, usize)) -> Vec<String> {
    let mut out = Vec::new();
    for n in range.0..=range.1 {
        if n == 0 || n > tokens.len() {
            continue;
        }
        for w in tokens.windows(n) {
            out.push(w.join(" "));
        }
    }
    out
}

/// Sparse row: strictly increasing columns with finite weights.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseVector {
    /// Builds from unordered `(column, weight)` pairs, summing duplicates.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let mut map = BTreeMap::new();
        for (c, w) in pairs {
            *map.entry(c).or_insert(0.0) += w;
        }
        let (indices, values) = map.into_iter().unzip();
        SparseVector { indices, values }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(c, v)| dense[c as usize] * v).sum()
    }

    pub fn max_index(&self) -> Option<u32> {
        self.indices.last().copied()
    }

    pub fn is_well_formed(&self) -> bool {
        self.indices.len() == self.values.len()
            && self.indices.windows(2).all(|w| w[0] < w[1])
            && self.values.iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VocabularyIndex {
    /// Column of each retained n-gram; columns follow lexicographic order.
    pub columns: BTreeMap<String, u32>,
    /// Document frequency per column.
    pub doc_freq: Vec<u32>,
    pub n_docs: usize,
    pub min_doc_freq: u32,
    pub ngram_range: (usize, usize),
    #[serde(skip)]
    lookup: OnceLock<HashMap<String, u32>>,
}

impl VocabularyIndex {
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn column(&self, ngram: &str) -> Option<u32> {
        self.lookup.get_or_init(|| self.columns.iter().map(|(k, v)| (k.clone(), *v)).collect()).get(ngram).copied()
    }

    /// Smoothed inverse document frequency, `ln((1 + N) / (1 + df)) + 1`.
    pub fn idf(&self, column: u32) -> f64 {
        let df = self.doc_freq[column as usize] as f64;
        ((1.0 + self.n_docs as f64) / (1.0 + df)).ln() + 1.0
    }

    fn counts(&self, text: &str) -> impl Iterator<Item = (u32, f64)> + '_ {
        ngrams(&word_tokens(text), self.ngram_range).into_iter().filter_map(|g| self.column(&g)).map(|c| (c, 1.0))
    }
}

/// Fits an n-gram vocabulary keeping n-grams with document frequency at
/// least `min_doc_freq`.
pub fn fit_vocabulary(
    texts: &[String],
    ngram_range: (usize, usize),
    min_doc_freq: u32,
    execution: Execution,
) -> Result<VocabularyIndex, ClassifyError> {
    if texts.is_empty() {
        return Err(ClassifyError::EmptyInput("no documents to fit a vocabulary on"));
    }
    if ngram_range.0 == 0 || ngram_range.0 > ngram_range.1 {
        return Err(ClassifyError::InvalidConfig(format!("bad n-gram range {ngram_range:?}")));
    }
    let per_doc: Vec<HashSet<String>> =
        exec::map(execution, texts, |t| ngrams(&word_tokens(t), ngram_range).into_iter().collect());
    let mut df: BTreeMap<String, u32> = BTreeMap::new();
    for set in per_doc {
        for g in set {
            *df.entry(g).or_insert(0) += 1;
        }
    }
    let kept: Vec<(String, u32)> = df.into_iter().filter(|(_, d)| *d >= min_doc_freq).collect();
    if kept.is_empty() {
        return Err(ClassifyError::EmptyVocabulary);
    }
    let mut columns = BTreeMap::new();
    let mut doc_freq = Vec::with_capacity(kept.len());
    for (i, (g, d)) in kept.into_iter().enumerate() {
        columns.insert(g, i as u32);
        doc_freq.push(d);
    }
    Ok(VocabularyIndex { columns, doc_freq, n_docs: texts.len(), min_doc_freq, ngram_range, lookup: OnceLock::new() })
}

/// Raw in-vocabulary n-gram counts.
pub fn bow_vectorize(text: &str, vocab: &VocabularyIndex) -> SparseVector {
    SparseVector::from_pairs(vocab.counts(text))
}

/// Term counts scaled by smoothed idf, then L2-normalized.
pub fn tfidf_vectorize(text: &str, vocab: &VocabularyIndex) -> SparseVector {
    let mut v = bow_vectorize(text, vocab);
    for (c, w) in v.indices.iter().zip(v.values.iter_mut()) {
        *w *= vocab.idf(*c);
    }
    let norm = v.norm();
    if norm > 0.0 {
        v.values.iter_mut().for_each(|w| *w /= norm);
    }
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Counts,
    TfIdf,
}

pub fn vectorize(text: &str, vocab: &VocabularyIndex, weighting: Weighting) -> SparseVector {
    match weighting {
        Weighting::Counts => bow_vectorize(text, vocab),
        Weighting::TfIdf => tfidf_vectorize(text, vocab),
    }
}

/// Vectorizes a batch, preserving order.
pub fn vectorize_all(
    texts: &[String],
    vocab: &VocabularyIndex,
    weighting: Weighting,
    execution: Execution,
) -> Vec<SparseVector> {
    exec::map(execution, texts, |t| vectorize(t, vocab, weighting))
}
