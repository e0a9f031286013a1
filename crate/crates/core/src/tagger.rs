//! Coarse part-of-speech tagging.
//!
//! The default [`LexiconTagger`] assigns each word its most frequent tag from
//! a word/tag table, falls back to suffix rules for unknown words and finally
//! to `NOUN`. Anything implementing [`Tagger`] can be plugged in instead.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Sentence;

const BUNDLED_LEXICON: &str = include_str!("../data/tag_lexicon.tsv");

/// Universal coarse tag set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Tag {
    Noun,
    Verb,
    Adj,
    Adv,
    Pron,
    Det,
    Adp,
    Num,
    Conj,
    Prt,
    Punct,
    X,
}

impl Tag {
    pub fn as_str(self) -> &'static str {
        match self {
            Tag::Noun => "NOUN",
            Tag::Verb => "VERB",
            Tag::Adj => "ADJ",
            Tag::Adv => "ADV",
            Tag::Pron => "PRON",
            Tag::Det => "DET",
            Tag::Adp => "ADP",
            Tag::Num => "NUM",
            Tag::Conj => "CONJ",
            Tag::Prt => "PRT",
            Tag::Punct => "PUNCT",
            Tag::X => "X",
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tag {
    type Err = TaggerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "NOUN" => Tag::Noun,
            "VERB" => Tag::Verb,
            "ADJ" => Tag::Adj,
            "ADV" => Tag::Adv,
            "PRON" => Tag::Pron,
            "DET" => Tag::Det,
            "ADP" => Tag::Adp,
            "NUM" => Tag::Num,
            "CONJ" => Tag::Conj,
            "PRT" => Tag::Prt,
            "PUNCT" | "." => Tag::Punct,
            "X" => Tag::X,
            other => return Err(TaggerError::UnknownTag(other.to_string())),
        })
    }
}

#[derive(Debug, Error)]
pub enum TaggerError {
    #[error("tagger resource {path} could not be read: {source}")]
    MissingResource { path: String, source: std::io::Error },
    #[error("tagger resource line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("unknown tag {0:?}")]
    UnknownTag(String),
}

pub trait Tagger: Send + Sync {
    /// Returns one tag per token.
    fn tag_tokens(&self, tokens: &[String]) -> Vec<Tag>;
}

/// Fills `pos` on a copy of the sentence.
pub fn pos_tag(sentence: &Sentence, tagger: &dyn Tagger) -> Sentence {
    let mut out = sentence.clone();
    out.pos = Some(tagger.tag_tokens(&sentence.tokens));
    out
}

#[derive(Clone, Debug)]
pub struct LexiconTagger {
    lexicon: HashMap<String, Tag>,
}

const SUFFIX_RULES: &[(&str, Tag)] = &[
    ("ly", Tag::Adv),
    ("ing", Tag::Verb),
    ("ed", Tag::Verb),
    ("ize", Tag::Verb),
    ("ise", Tag::Verb),
    ("ous", Tag::Adj),
    ("ful", Tag::Adj),
    ("able", Tag::Adj),
    ("ible", Tag::Adj),
    ("ive", Tag::Adj),
    ("less", Tag::Adj),
    ("ish", Tag::Adj),
    ("ical", Tag::Adj),
    ("tion", Tag::Noun),
    ("ment", Tag::Noun),
    ("ness", Tag::Noun),
    ("ity", Tag::Noun),
];

impl LexiconTagger {
    /// The tagger backed by the word/tag table shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_LEXICON).expect("bundled lexicon is well-formed")
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, TaggerError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| TaggerError::MissingResource { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    /// Parses `word<TAB>TAG` lines; `#` starts a comment line. Later lines
    /// override earlier ones.
    pub fn parse(text: &str) -> Result<Self, TaggerError> {
        let mut lexicon = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, tag) = line
                .split_once('\t')
                .ok_or_else(|| TaggerError::Malformed { line: i + 1, message: "expected word<TAB>tag".into() })?;
            lexicon.insert(word.to_lowercase(), tag.trim().parse()?);
        }
        Ok(LexiconTagger { lexicon })
    }

    pub fn lookup(&self, word: &str) -> Option<Tag> {
        self.lexicon.get(&word.to_lowercase()).copied()
    }

    pub fn len(&self) -> usize {
        self.lexicon.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lexicon.is_empty()
    }

    fn tag_word(&self, word: &str) -> Tag {
        if let Some(tag) = self.lookup(word) {
            return tag;
        }
        if !word.chars().any(char::is_alphanumeric) {
            return Tag::Punct;
        }
        if word.chars().all(|c| c.is_ascii_digit() || c == ',' || c == '.') {
            return Tag::Num;
        }
        let lower = word.to_lowercase();
        for (suffix, tag) in SUFFIX_RULES {
            if lower.len() > suffix.len() + 2 && lower.ends_with(suffix) {
                return *tag;
            }
        }
        Tag::Noun
    }
}

impl Tagger for LexiconTagger {
    fn tag_tokens(&self, tokens: &[String]) -> Vec<Tag> {
        tokens.iter().map(|t| self.tag_word(t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn office_example_has_noun_at_six() {
        let t = LexiconTagger::bundled();
        let tags = t.tag_tokens(&toks(&["I", "will", "be", "out", "of", "the", "office", "on", "Friday"]));
        assert_eq!(tags[6], Tag::Noun);
        assert!(tags[..6].iter().all(|&t| t != Tag::Noun));
    }

    #[test]
    fn snow_falls() {
        let t = LexiconTagger::bundled();
        assert_eq!(t.tag_tokens(&toks(&["Snow", "falls"])), vec![Tag::Noun, Tag::Verb]);
        assert_eq!(t.lookup("snow"), Some(Tag::Noun));
        assert_eq!(t.lookup("falls"), Some(Tag::Verb));
    }

    #[test]
    fn empty_sentence_has_no_tags() {
        let t = LexiconTagger::bundled();
        assert!(t.tag_tokens(&[]).is_empty());
    }

    #[test]
    fn fallbacks() {
        let t = LexiconTagger::bundled();
        let tags = t.tag_tokens(&toks(&["zorblax", "quietly", ";", "1,200", "rebranding"]));
        assert_eq!(tags, vec![Tag::Noun, Tag::Adv, Tag::Punct, Tag::Num, Tag::Verb]);
    }

    #[test]
    fn missing_resource_is_a_configuration_error() {
        let err = LexiconTagger::from_path("/nonexistent/lexicon.tsv").unwrap_err();
        assert!(matches!(err, TaggerError::MissingResource { .. }));
    }

    #[test]
    fn malformed_lexicon_rejected() {
        assert!(LexiconTagger::parse("word NOUN\n").is_err());
        assert!(LexiconTagger::parse("word\tFOO\n").is_err());
    }
}
