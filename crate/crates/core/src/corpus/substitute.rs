use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Sentence, SynthError};
use crate::tagger::Tag;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubstitutionRule {
    FirstNoun,
    SlangTable,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubstitutionRecord {
    pub token_index: usize,
    pub original: String,
    pub replacement: String,
    pub rule: SubstitutionRule,
}

/// Copies the capitalization of `original`'s first letter onto `replacement`.
pub fn match_case(original: &str, replacement: &str) -> String {
    let upper = original.chars().next().is_some_and(char::is_uppercase);
    let mut chars = replacement.chars();
    match chars.next() {
        Some(first) if upper => first.to_uppercase().chain(chars).collect(),
        _ => replacement.to_string(),
    }
}

/// Smallest token index tagged `NOUN`.
pub fn first_noun_index(sentence: &Sentence) -> Result<Option<usize>, SynthError> {
    let pos = match &sentence.pos {
        Some(pos) if pos.len() == sentence.tokens.len() => pos,
        _ => return Err(SynthError::Untagged),
    };
    Ok(pos.iter().position(|&t| t == Tag::Noun))
}

/// Replaces the first noun with a noun drawn uniformly from `candidates`,
/// redrawing until it differs (case-insensitively) from the original.
pub fn substitute_first_noun<R: Rng + ?Sized>(
    sentence: &Sentence,
    candidates: &BTreeSet<String>,
    rng: &mut R,
) -> Result<(Sentence, SubstitutionRecord), SynthError> {
    let index = first_noun_index(sentence)?.ok_or(SynthError::NotACandidate)?;
    let original = &sentence.tokens[index];
    let lowered = original.to_lowercase();
    let pool: Vec<&String> = candidates.iter().collect();
    if !pool.iter().any(|c| c.to_lowercase() != lowered) {
        return Err(SynthError::NoDistinctReplacement(original.clone()));
    }
    let drawn = loop {
        let c = pool[rng.gen_range(0..pool.len())];
        if c.to_lowercase() != lowered {
            break c;
        }
    };
    let replacement = match_case(original, drawn);
    let record = SubstitutionRecord {
        token_index: index,
        original: original.clone(),
        replacement: replacement.clone(),
        rule: SubstitutionRule::FirstNoun,
    };
    Ok((sentence.with_token_replaced(index, &replacement), record))
}

/// Target term to code word mapping, both lowercase.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodewordTable {
    entries: BTreeMap<String, String>,
}

impl CodewordTable {
    pub fn new<I, A, B>(pairs: I) -> Result<Self, SynthError>
    where
        I: IntoIterator<Item = (A, B)>,
        A: AsRef<str>,
        B: AsRef<str>,
    {
        let mut entries = BTreeMap::new();
        for (target, code) in pairs {
            let target = target.as_ref().trim().to_lowercase();
            let code = code.as_ref().trim().to_lowercase();
            if target.is_empty() || code.is_empty() {
                return Err(SynthError::InvalidCodewords("empty entry".into()));
            }
            if target == code {
                return Err(SynthError::InvalidCodewords(format!("code word equals its target {target:?}")));
            }
            if entries.insert(target.clone(), code).is_some() {
                return Err(SynthError::InvalidCodewords(format!("duplicate target {target:?}")));
            }
        }
        Ok(CodewordTable { entries })
    }

    /// The drug slang table: cocaine, marijuana and heroin.
    pub fn drug_slang() -> Self {
        Self::new([("cocaine", "line"), ("marijuana", "bush"), ("heroin", "pure")]).expect("static table")
    }

    /// Parses a two-column TSV (`target<TAB>codeword`); `#` lines are comments.
    pub fn parse_tsv(text: &str) -> Result<Self, SynthError> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            match (cols.next(), cols.next(), cols.next()) {
                (Some(a), Some(b), None) => pairs.push((a.to_string(), b.to_string())),
                _ => {
                    return Err(SynthError::InvalidCodewords(format!(
                        "line {}: expected two tab-separated columns",
                        i + 1
                    )))
                }
            }
        }
        Self::new(pairs)
    }

    pub fn get(&self, target: &str) -> Option<&str> {
        self.entries.get(target).map(String::as_str)
    }

    pub fn targets(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn codewords(&self) -> impl Iterator<Item = &str> {
        self.entries.values().map(String::as_str)
    }

    /// True when any token is a table target.
    pub fn mentions(&self, sentence: &Sentence) -> bool {
        sentence.tokens.iter().any(|t| self.entries.contains_key(&t.to_lowercase()))
    }
}

/// Replaces every token whose lowercase form is a table target.
pub fn substitute_codewords(sentence: &Sentence, table: &CodewordTable) -> (Sentence, Vec<SubstitutionRecord>) {
    let mut out = sentence.clone();
    let mut records = Vec::new();
    for (index, token) in sentence.tokens.iter().enumerate() {
        if let Some(code) = table.get(&token.to_lowercase()) {
            let replacement = match_case(token, code);
            out = out.with_token_replaced(index, &replacement);
            records.push(SubstitutionRecord {
                token_index: index,
                original: token.clone(),
                replacement,
                rule: SubstitutionRule::SlangTable,
            });
        }
    }
    (out, records)
}

/// Undoes substitutions on a token list, last record first.
pub fn revert_tokens(tokens: &[String], records: &[SubstitutionRecord]) -> Result<Vec<String>, SynthError> {
    let mut out = tokens.to_vec();
    for r in records.iter().rev() {
        match out.get_mut(r.token_index) {
            Some(t) if *t == r.replacement => *t = r.original.clone(),
            _ => return Err(SynthError::Irreversible(r.token_index)),
        }
    }
    Ok(out)
}
