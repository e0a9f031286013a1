use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::tagger::Tag;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DocumentSource {
    Email,
    Comment,
    #[default]
    Other,
}

/// One document of an input collection, as read from a JSONL corpus line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub body: String,
    #[serde(default)]
    pub source: DocumentSource,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

impl RawDocument {
    pub fn new(id: impl Into<String>, body: impl Into<String>, source: DocumentSource) -> Self {
        RawDocument { id: id.into(), body: body.into(), source, meta: BTreeMap::new() }
    }
}

/// A tokenized sentence with provenance.
///
/// `text` is the source slice with whitespace runs collapsed to a single
/// space; `token_spans` index into `text`, `char_span` is the byte range of
/// the sentence inside the originating document body.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub doc_id: String,
    pub char_span: (usize, usize),
    pub text: String,
    pub tokens: Vec<String>,
    pub token_spans: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<Vec<Tag>>,
}

fn token_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[\p{L}\p{N}]+(?:[-'’][\p{L}\p{N}]+)*|[^\s\p{L}\p{N}]").expect("token regex"))
}

/// Splits text into word and punctuation tokens with byte spans.
pub fn tokenize_with_spans(text: &str) -> Vec<(String, (usize, usize))> {
    token_regex().find_iter(text).map(|m| (m.as_str().to_string(), (m.start(), m.end()))).collect()
}

/// True for tokens that count as words: at least one letter or digit.
pub fn is_word_token(token: &str) -> bool {
    token.chars().any(char::is_alphanumeric)
}

impl Sentence {
    /// Builds a sentence from free text, tokenizing it.
    pub fn from_text(doc_id: impl Into<String>, char_span: (usize, usize), raw: &str) -> Self {
        let text = raw.split_whitespace().collect::<Vec<_>>().join(" ");
        let (tokens, token_spans) = tokenize_with_spans(&text).into_iter().unzip();
        Sentence { doc_id: doc_id.into(), char_span, text, tokens, token_spans, pos: None }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Number of tokens containing at least one letter or digit.
    pub fn word_count(&self) -> usize {
        self.tokens.iter().filter(|t| is_word_token(t)).count()
    }

    pub fn is_tagged(&self) -> bool {
        self.pos.as_ref().is_some_and(|p| p.len() == self.tokens.len())
    }

    /// Returns a copy with the token at `index` replaced, splicing the
    /// surface text so everything else stays byte-identical.
    pub fn with_token_replaced(&self, index: usize, replacement: &str) -> Sentence {
        let (start, end) = self.token_spans[index];
        let mut text = String::with_capacity(self.text.len() + replacement.len());
        text.push_str(&self.text[..start]);
        text.push_str(replacement);
        text.push_str(&self.text[end..]);
        let delta = replacement.len() as isize - (end - start) as isize;
        let token_spans = self
            .token_spans
            .iter()
            .enumerate()
            .map(|(i, &(s, e))| match i.cmp(&index) {
                std::cmp::Ordering::Less => (s, e),
                std::cmp::Ordering::Equal => (s, s + replacement.len()),
                std::cmp::Ordering::Greater => ((s as isize + delta) as usize, (e as isize + delta) as usize),
            })
            .collect();
        let mut tokens = self.tokens.clone();
        tokens[index] = replacement.to_string();
        Sentence {
            doc_id: self.doc_id.clone(),
            char_span: self.char_span,
            text,
            tokens,
            token_spans,
            pos: self.pos.clone(),
        }
    }
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Splits a document body into sentences.
///
/// Boundaries are runs of `.`, `!` or `?` followed by whitespace or the end
/// of a block, and blank lines. For email sources, lines whose first
/// non-blank character is `>` (quoted replies) are dropped and act as
/// boundaries. The terminal punctuation itself is not part of any sentence.
pub fn extract_sentences(doc: &RawDocument) -> Vec<Sentence> {
    let body = doc.body.as_str();
    let strip_quotes = doc.source == DocumentSource::Email;

    // Blocks of consecutive kept, non-blank lines as byte ranges.
    let mut blocks: Vec<(usize, usize)> = Vec::new();
    let mut current: Option<(usize, usize)> = None;
    let mut offset = 0;
    for line in body.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let content = line.trim_end_matches(['\n', '\r']);
        let trimmed = content.trim_start();
        let dropped = trimmed.is_empty() || (strip_quotes && trimmed.starts_with('>'));
        if dropped {
            if let Some(b) = current.take() {
                blocks.push(b);
            }
            continue;
        }
        let end = start + content.len();
        current = Some(match current {
            Some((s, _)) => (s, end),
            None => (start, end),
        });
    }
    if let Some(b) = current {
        blocks.push(b);
    }

    let mut out = Vec::new();
    for (bstart, bend) in blocks {
        let block = &body[bstart..bend];
        let mut seg_start = 0;
        let mut iter = block.char_indices().peekable();
        while let Some((i, c)) = iter.next() {
            if !is_terminal(c) {
                continue;
            }
            let mut run_end = i + c.len_utf8();
            while let Some(&(j, d)) = iter.peek() {
                if is_terminal(d) {
                    run_end = j + d.len_utf8();
                    iter.next();
                } else {
                    break;
                }
            }
            let at_boundary = match iter.peek() {
                None => true,
                Some(&(_, d)) => d.is_whitespace(),
            };
            if at_boundary {
                push_segment(doc, bstart, block, seg_start, i, &mut out);
                seg_start = run_end;
            }
        }
        push_segment(doc, bstart, block, seg_start, block.len(), &mut out);
    }
    out
}

fn push_segment(
    doc: &RawDocument,
    block_offset: usize,
    block: &str,
    start: usize,
    end: usize,
    out: &mut Vec<Sentence>,
) {
    let seg = &block[start..end];
    let lead = seg.len() - seg.trim_start().len();
    let trimmed = seg.trim();
    if trimmed.is_empty() {
        return;
    }
    let abs_start = block_offset + start + lead;
    let sentence = Sentence::from_text(doc.id.clone(), (abs_start, abs_start + trimmed.len()), trimmed);
    if !sentence.is_empty() {
        out.push(sentence);
    }
}
