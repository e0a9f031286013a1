//! Character-trigram language identification.
//!
//! Each bundled profile is a trigram count table built from a short sample
//! text. A text is scored with add-alpha smoothed trigram log-likelihoods and
//! the per-language posteriors (uniform prior) give the confidence.

use std::collections::{HashMap, HashSet};

/// Code returned for inputs with no letters.
pub const UNDETERMINED: &str = "und";

const SMOOTHING: f64 = 0.5;

const BUNDLED: &[(&str, &str)] = &[
    ("en", include_str!("../../data/langid/en.txt")),
    ("de", include_str!("../../data/langid/de.txt")),
    ("nl", include_str!("../../data/langid/nl.txt")),
    ("fr", include_str!("../../data/langid/fr.txt")),
    ("es", include_str!("../../data/langid/es.txt")),
    ("it", include_str!("../../data/langid/it.txt")),
];

#[derive(Clone, Debug, PartialEq)]
pub struct LanguageGuess {
    pub lang: String,
    pub confidence: f64,
}

pub trait LanguageIdentifier: Send + Sync {
    fn identify(&self, text: &str) -> LanguageGuess;
}

/// Word-padded character trigrams of the lowercased letters in `text`.
pub fn trigrams(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split(|c: char| !c.is_alphabetic()).filter(|w| !w.is_empty()) {
        let padded: Vec<char> =
            std::iter::once(' ').chain(word.chars().flat_map(char::to_lowercase)).chain(std::iter::once(' ')).collect();
        for w in padded.windows(3) {
            out.push(w.iter().collect());
        }
    }
    out
}

#[derive(Clone, Debug)]
struct Profile {
    lang: String,
    counts: HashMap<String, f64>,
    total: f64,
}

#[derive(Clone, Debug)]
pub struct TrigramLanguageId {
    profiles: Vec<Profile>,
    vocabulary: f64,
}

impl TrigramLanguageId {
    pub fn bundled() -> Self {
        Self::from_samples(BUNDLED.iter().map(|(l, t)| (l.to_string(), t.to_string())))
    }

    /// Builds profiles from `(language code, sample text)` pairs.
    pub fn from_samples(samples: impl IntoIterator<Item = (String, String)>) -> Self {
        let mut profiles = Vec::new();
        let mut all = HashSet::new();
        for (lang, text) in samples {
            let mut counts = HashMap::new();
            let grams = trigrams(&text);
            for g in &grams {
                *counts.entry(g.clone()).or_insert(0.0) += 1.0;
                all.insert(g.clone());
            }
            profiles.push(Profile { lang, counts, total: grams.len() as f64 });
        }
        TrigramLanguageId { profiles, vocabulary: all.len() as f64 + 1.0 }
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.profiles.iter().map(|p| p.lang.as_str())
    }

    /// Posterior per language, in profile order.
    pub fn posteriors(&self, text: &str) -> Vec<(String, f64)> {
        let grams = trigrams(text);
        if grams.is_empty() || self.profiles.is_empty() {
            return Vec::new();
        }
        let logs: Vec<f64> = self
            .profiles
            .iter()
            .map(|p| {
                let denom = (p.total + SMOOTHING * self.vocabulary).ln();
                grams.iter().map(|g| (p.counts.get(g).copied().unwrap_or(0.0) + SMOOTHING).ln() - denom).sum()
            })
            .collect();
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = logs.iter().map(|l| (l - max).exp()).sum();
        self.profiles.iter().zip(logs).map(|(p, l)| (p.lang.clone(), (l - max).exp() / z)).collect()
    }
}

impl LanguageIdentifier for TrigramLanguageId {
    fn identify(&self, text: &str) -> LanguageGuess {
        self.posteriors(text)
            .into_iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(lang, confidence)| LanguageGuess { lang, confidence })
            .unwrap_or(LanguageGuess { lang: UNDETERMINED.to_string(), confidence: 0.0 })
    }
}

/// Convenience wrapper over the bundled profiles.
pub fn identify_language(text: &str) -> LanguageGuess {
    use std::sync::OnceLock;
    static ID: OnceLock<TrigramLanguageId> = OnceLock::new();
    ID.get_or_init(TrigramLanguageId::bundled).identify(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn english_with_high_confidence() {
        let g = identify_language("I'm about to buy some coffee for the party");
        assert_eq!(g.lang, "en");
        assert!(g.confidence >= 0.9, "{g:?}");
    }

    #[test]
    fn german_is_not_english() {
        let g = identify_language("Der kluge Hans war ein Pferd");
        assert_ne!(g.lang, "en");
        assert_eq!(g.lang, "de");
    }

    #[test]
    fn empty_is_undetermined() {
        assert_eq!(identify_language(""), LanguageGuess { lang: "und".into(), confidence: 0.0 });
        assert_eq!(identify_language("123 ... !!").lang, "und");
    }

    #[test]
    fn confidences_are_probabilities() {
        let id = TrigramLanguageId::bundled();
        for text in ["Ik ben vrijdag niet thuis", "la casa es muy bonita", "the rock on Friday", "x"] {
            let p = id.posteriors(text);
            let sum: f64 = p.iter().map(|(_, v)| v).sum();
            assert!((sum - 1.0).abs() < 1e-9);
            assert!(p.iter().all(|(_, v)| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn trigram_padding() {
        assert_eq!(trigrams("Hi!"), vec![" hi", "hi "]);
    }
}
