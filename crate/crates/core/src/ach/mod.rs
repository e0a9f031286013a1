//! Analysis of Competing Hypotheses: an evidence × hypothesis matrix of
//! consistency ratings scored by credibility/relevance-weighted
//! inconsistency.

mod store;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use store::{read_matrix, write_atomic, write_matrix};

#[derive(Debug, Error)]
pub enum AchError {
    #[error("unknown hypothesis {0:?}")]
    UnknownHypothesis(String),
    #[error("unknown evidence {0:?}")]
    UnknownEvidence(String),
    #[error("{kind} {id:?} already exists")]
    Duplicate { kind: &'static str, id: String },
    #[error("{0} must not be empty")]
    EmptyText(&'static str),
    #[error("matrix has no hypotheses")]
    EmptyMatrix,
    #[error("invalid score table: {0}")]
    InvalidScoreTable(String),
    #[error("confidence {0} is outside [0, 1]")]
    ConfidenceOutOfRange(f64),
    #[error("detection reference {0:?} does not resolve")]
    DanglingReference(String),
    #[error("stale revision: expected {expected}, matrix is at {actual}")]
    StaleRevision { expected: u64, actual: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoldenQuestion {
    Who,
    Why,
    What,
    How,
    When,
    Where,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriangleEdge {
    Motive,
    Opportunity,
    Rationalization,
}

pub fn question_to_edge(q: GoldenQuestion) -> TriangleEdge {
    match q {
        GoldenQuestion::Who | GoldenQuestion::Why => TriangleEdge::Motive,
        GoldenQuestion::What | GoldenQuestion::How => TriangleEdge::Opportunity,
        GoldenQuestion::When | GoldenQuestion::Where => TriangleEdge::Rationalization,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConsistencyRating {
    II,
    I,
    NA,
    C,
    CC,
}

impl ConsistencyRating {
    pub const ALL: [ConsistencyRating; 5] = [
        ConsistencyRating::II,
        ConsistencyRating::I,
        ConsistencyRating::NA,
        ConsistencyRating::C,
        ConsistencyRating::CC,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConsistencyRating::II => "II",
            ConsistencyRating::I => "I",
            ConsistencyRating::NA => "NA",
            ConsistencyRating::C => "C",
            ConsistencyRating::CC => "CC",
        }
    }
}

impl fmt::Display for ConsistencyRating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Low,
    Medium,
    High,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvidenceSource {
    #[default]
    Manual,
    Detection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvidenceItem {
    pub id: String,
    pub description: String,
    pub credibility: Level,
    pub relevance: Level,
    #[serde(default)]
    pub question_tags: BTreeSet<GoldenQuestion>,
    #[serde(default)]
    pub source: EvidenceSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection_ref: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub id: String,
    pub statement: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMode {
    /// Only inconsistent ratings carry (negative) value.
    #[default]
    Inconsistency,
    /// Consistent ratings may also carry non-negative value.
    Signed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatingValues {
    #[serde(rename = "II")]
    pub ii: f64,
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(rename = "NA")]
    pub na: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "CC")]
    pub cc: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelWeights {
    pub low: f64,
    pub medium: f64,
    pub high: f64,
}

/// Lookup table turning ratings and credibility/relevance levels into
/// numbers. The defaults are editable starting values, not calibrated
/// quantities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    #[serde(default)]
    pub mode: ScoreMode,
    pub ratings: RatingValues,
    pub weights: LevelWeights,
}

impl Default for ScoreTable {
    fn default() -> Self {
        ScoreTable {
            mode: ScoreMode::Inconsistency,
            ratings: RatingValues { ii: -2.0, i: -1.0, na: 0.0, c: 0.0, cc: 0.0 },
            weights: LevelWeights { low: 0.5, medium: 1.0, high: 1.5 },
        }
    }
}

impl ScoreTable {
    pub fn base(&self, r: ConsistencyRating) -> f64 {
        match r {
            ConsistencyRating::II => self.ratings.ii,
            ConsistencyRating::I => self.ratings.i,
            ConsistencyRating::NA => self.ratings.na,
            ConsistencyRating::C => self.ratings.c,
            ConsistencyRating::CC => self.ratings.cc,
        }
    }

    pub fn weight(&self, l: Level) -> f64 {
        match l {
            Level::Low => self.weights.low,
            Level::Medium => self.weights.medium,
            Level::High => self.weights.high,
        }
    }

    pub fn validate(&self) -> Result<(), AchError> {
        let RatingValues { ii, i, na, c, cc } = self.ratings;
        let LevelWeights { low, medium, high } = self.weights;
        let all = [ii, i, na, c, cc, low, medium, high];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(AchError::InvalidScoreTable("values must be finite".into()));
        }
        if !(ii <= i && i < 0.0) {
            return Err(AchError::InvalidScoreTable("need II <= I < 0".into()));
        }
        if na != 0.0 {
            return Err(AchError::InvalidScoreTable("NA must be 0".into()));
        }
        match self.mode {
            ScoreMode::Inconsistency if c != 0.0 || cc != 0.0 => {
                return Err(AchError::InvalidScoreTable("C and CC must be 0 in inconsistency mode".into()))
            }
            ScoreMode::Signed if !(0.0 <= c && c <= cc) => {
                return Err(AchError::InvalidScoreTable("need 0 <= C <= CC".into()))
            }
            _ => {}
        }
        if !(0.0 < low && low < medium && medium < high) {
            return Err(AchError::InvalidScoreTable("level weights must be positive and strictly increasing".into()));
        }
        Ok(())
    }

    /// Copy with every level weight multiplied by `k`.
    pub fn scaled_weights(&self, k: f64) -> Self {
        let mut t = *self;
        t.weights = LevelWeights { low: t.weights.low * k, medium: t.weights.medium * k, high: t.weights.high * k };
        t
    }
}

pub fn evidence_weight(e: &EvidenceItem, t: &ScoreTable) -> f64 {
    t.weight(e.credibility) * t.weight(e.relevance)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AchMatrix {
    pub id: String,
    #[serde(default)]
    pub title: String,
    pub hypotheses: BTreeMap<String, Hypothesis>,
    pub evidence: BTreeMap<String, EvidenceItem>,
    /// evidence id → hypothesis id → rating; absent cells are NA.
    pub ratings: BTreeMap<String, BTreeMap<String, ConsistencyRating>>,
    pub score_table: ScoreTable,
    pub revision: u64,
}

impl AchMatrix {
    pub fn new(id: impl Into<String>, title: impl Into<String>) -> Self {
        AchMatrix { id: id.into(), title: title.into(), ..Default::default() }
    }

    pub fn add_hypothesis(&mut self, h: Hypothesis) -> Result<(), AchError> {
        if h.statement.trim().is_empty() {
            return Err(AchError::EmptyText("hypothesis statement"));
        }
        if h.id.is_empty() {
            return Err(AchError::EmptyText("hypothesis id"));
        }
        if self.hypotheses.contains_key(&h.id) {
            return Err(AchError::Duplicate { kind: "hypothesis", id: h.id });
        }
        self.hypotheses.insert(h.id.clone(), h);
        self.revision += 1;
        Ok(())
    }

    pub fn remove_hypothesis(&mut self, id: &str) -> Result<Hypothesis, AchError> {
        let h = self.hypotheses.remove(id).ok_or_else(|| AchError::UnknownHypothesis(id.into()))?;
        for row in self.ratings.values_mut() {
            row.remove(id);
        }
        self.ratings.retain(|_, row| !row.is_empty());
        self.revision += 1;
        Ok(h)
    }

    pub fn add_evidence(&mut self, e: EvidenceItem) -> Result<(), AchError> {
        if e.description.trim().is_empty() {
            return Err(AchError::EmptyText("evidence description"));
        }
        if e.id.is_empty() {
            return Err(AchError::EmptyText("evidence id"));
        }
        if self.evidence.contains_key(&e.id) {
            return Err(AchError::Duplicate { kind: "evidence", id: e.id });
        }
        self.evidence.insert(e.id.clone(), e);
        self.revision += 1;
        Ok(())
    }

    pub fn remove_evidence(&mut self, id: &str) -> Result<EvidenceItem, AchError> {
        let e = self.evidence.remove(id).ok_or_else(|| AchError::UnknownEvidence(id.into()))?;
        self.ratings.remove(id);
        self.revision += 1;
        Ok(e)
    }

    pub fn set_rating(&mut self, evidence: &str, hypothesis: &str, r: ConsistencyRating) -> Result<(), AchError> {
        if !self.evidence.contains_key(evidence) {
            return Err(AchError::UnknownEvidence(evidence.into()));
        }
        if !self.hypotheses.contains_key(hypothesis) {
            return Err(AchError::UnknownHypothesis(hypothesis.into()));
        }
        self.ratings.entry(evidence.to_string()).or_default().insert(hypothesis.to_string(), r);
        self.revision += 1;
        Ok(())
    }

    pub fn set_score_table(&mut self, t: ScoreTable) -> Result<(), AchError> {
        t.validate()?;
        self.score_table = t;
        self.revision += 1;
        Ok(())
    }

    pub fn rating(&self, evidence: &str, hypothesis: &str) -> ConsistencyRating {
        self.ratings.get(evidence).and_then(|row| row.get(hypothesis)).copied().unwrap_or(ConsistencyRating::NA)
    }

    /// Checks that every rating references existing ids and the table is valid.
    pub fn validate(&self) -> Result<(), AchError> {
        self.score_table.validate()?;
        for (e, row) in &self.ratings {
            if !self.evidence.contains_key(e) {
                return Err(AchError::UnknownEvidence(e.clone()));
            }
            if let Some(h) = row.keys().find(|h| !self.hypotheses.contains_key(*h)) {
                return Err(AchError::UnknownHypothesis(h.clone()));
            }
        }
        Ok(())
    }

    fn contributions(&self, hypothesis: &str) -> Result<Vec<(String, f64)>, AchError> {
        if !self.hypotheses.contains_key(hypothesis) {
            return Err(AchError::UnknownHypothesis(hypothesis.into()));
        }
        Ok(self
            .evidence
            .values()
            .map(|e| {
                (
                    e.id.clone(),
                    self.score_table.base(self.rating(&e.id, hypothesis)) * evidence_weight(e, &self.score_table),
                )
            })
            .collect())
    }
}

/// Σ over evidence of `base(rating) × weight(evidence)`.
pub fn inconsistency_score(m: &AchMatrix, hypothesis: &str) -> Result<f64, AchError> {
    Ok(m.contributions(hypothesis)?.iter().map(|(_, c)| c).sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedHypothesis {
    pub id: String,
    pub statement: String,
    pub score: f64,
    pub confidence: f64,
}

/// Hypotheses by descending score (least inconsistent first), ties by id.
pub fn rank_hypotheses(m: &AchMatrix) -> Result<Vec<RankedHypothesis>, AchError> {
    if m.hypotheses.is_empty() {
        return Err(AchError::EmptyMatrix);
    }
    let scores: Vec<(String, f64)> =
        m.hypotheses.keys().map(|h| Ok((h.clone(), inconsistency_score(m, h)?))).collect::<Result<_, AchError>>()?;
    let confidence = normalize_scores(&scores);
    let mut ranked: Vec<RankedHypothesis> = scores
        .into_iter()
        .map(|(id, score)| RankedHypothesis {
            statement: m.hypotheses[&id].statement.clone(),
            confidence: confidence[&id],
            id,
            score,
        })
        .collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
    Ok(ranked)
}

/// Min-max normalization to [0, 1]; when all scores are equal every
/// hypothesis gets 1.0.
pub fn normalize_scores(scores: &[(String, f64)]) -> BTreeMap<String, f64> {
    let min = scores.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let max = scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    scores.iter().map(|(h, s)| (h.clone(), if max > min { (s - min) / (max - min) } else { 1.0 })).collect()
}

/// Product of confidences. This treats the underlying hypotheses as
/// independent, which they often are not; the result is a rough
/// indicator, not a probability.
pub fn combine_confidence(values: &[f64]) -> Result<f64, AchError> {
    let mut p = 1.0;
    for &v in values {
        if !(0.0..=1.0).contains(&v) {
            return Err(AchError::ConfidenceOutOfRange(v));
        }
        p *= v;
    }
    Ok(p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub evidence_id: String,
    pub contribution: f64,
    pub score_without: f64,
}

/// Per-evidence contribution to `hypothesis`'s score and the score with
/// that item removed, largest |contribution| first (ties by id).
pub fn sensitivity(m: &AchMatrix, hypothesis: &str) -> Result<Vec<Sensitivity>, AchError> {
    let contributions = m.contributions(hypothesis)?;
    let mut out: Vec<Sensitivity> = contributions
        .iter()
        .enumerate()
        .map(|(k, (evidence_id, contribution))| Sensitivity {
            evidence_id: evidence_id.clone(),
            contribution: *contribution,
            score_without: contributions.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, (_, c))| c).sum(),
        })
        .collect();
    out.sort_by(|a, b| {
        b.contribution.abs().total_cmp(&a.contribution.abs()).then_with(|| a.evidence_id.cmp(&b.evidence_id))
    });
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionDefaults {
    pub credibility: Level,
    pub relevance: Level,
    pub question_tags: BTreeSet<GoldenQuestion>,
}

impl Default for DetectionDefaults {
    fn default() -> Self {
        DetectionDefaults {
            credibility: Level::High,
            relevance: Level::Medium,
            question_tags: BTreeSet::from([GoldenQuestion::Who]),
        }
    }
}

/// "A", "A and B", "A, B and C".
pub fn join_participants(participants: &[String]) -> String {
    match participants {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

pub fn detection_description(participants: &[String]) -> String {
    let names: Vec<String> = participants.iter().map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect();
    match names.len() {
        0 => "Use of code words (participants unknown)".to_string(),
        1 => format!("Use of code words by {}", names[0]),
        _ => format!("Use of code words between {}", join_participants(&names)),
    }
}

/// Evidence item for a code-word detection. `resolves` reports whether the
/// referenced detection output exists.
pub fn evidence_from_detection(
    id: impl Into<String>,
    report_ref: &str,
    participants: &[String],
    defaults: &DetectionDefaults,
    resolves: impl Fn(&str) -> bool,
) -> Result<EvidenceItem, AchError> {
    if !resolves(report_ref) {
        return Err(AchError::DanglingReference(report_ref.to_string()));
    }
    Ok(EvidenceItem {
        id: id.into(),
        description: detection_description(participants),
        credibility: defaults.credibility,
        relevance: defaults.relevance,
        question_tags: defaults.question_tags.clone(),
        source: EvidenceSource::Detection,
        detection_ref: Some(report_ref.to_string()),
    })
}
