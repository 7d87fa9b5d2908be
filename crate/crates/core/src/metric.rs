//! Entity-set overlap scores.
//!
//! A score is computed in two phases. The predicted and target sets are
//! first aligned one-to-one by maximizing the assignment similarity (see
//! [`crate::assignment`]). Each matched pair is then compared with an
//! unweighted mean of per-key Jaccard similarities, the sum over matched
//! pairs is divided by a normalizer: the predicted-set size (precision),
//! the target-set size (recall) or the larger of the two (max).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adapters::TripletRecord;
use crate::assignment::{
    matrix_from_prepared, solve_assignment, solve_assignment_with_tiebreak, AssignmentMode, AssignmentWeights,
    PreparedEntity, SimilarityMatrix,
};
use crate::entity::{is_reserved_key, EntityRecord, EntitySet};
use crate::error::{Error, Result};
use crate::text::{tokenize, TokenizerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Divide by the predicted-set size.
    Precision,
    /// Divide by the target-set size.
    Recall,
    /// Divide by the larger of the two sizes.
    Max,
}

impl Normalization {
    pub const ALL: [Normalization; 3] = [Self::Precision, Self::Recall, Self::Max];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Precision => "precision",
            Self::Recall => "recall",
            Self::Max => "max",
        }
    }

    /// Divides a matched-pair total by the normalizer. Two empty sets score 1;
    /// a zero normalizer against a non-empty opposite set scores 0.
    pub fn apply(self, total: f64, m: usize, n: usize) -> f64 {
        if m == 0 && n == 0 {
            return 1.0;
        }
        let mu = match self {
            Self::Precision => m,
            Self::Recall => n,
            Self::Max => m.max(n),
        };
        if mu == 0 {
            0.0
        } else {
            (total / mu as f64).clamp(0.0, 1.0)
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::UnknownMetric(s.to_string()))
    }
}

/// One of the nine (assignment mode, normalization) combinations. Displays
/// as `aesop-<mode>-<normalization>`, e.g. `aesop-multiprop-max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Variant {
    pub mode: AssignmentMode,
    pub normalization: Normalization,
}

impl Variant {
    pub fn new(mode: AssignmentMode, normalization: Normalization) -> Self {
        Self { mode, normalization }
    }

    pub fn all() -> impl Iterator<Item = Variant> {
        AssignmentMode::ALL
            .into_iter()
            .flat_map(|m| Normalization::ALL.into_iter().map(move |n| Variant::new(m, n)))
    }

    pub fn name(&self) -> String {
        format!("aesop-{}-{}", self.mode, self.normalization)
    }
}

impl Default for Variant {
    fn default() -> Self {
        Self::new(AssignmentMode::MultiProp, Normalization::Max)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "aesop-{}-{}", self.mode, self.normalization)
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownMetric(s.to_string());
        let rest = s.strip_prefix("aesop-").ok_or_else(unknown)?;
        let (mode, norm) = rest.split_once('-').ok_or_else(unknown)?;
        Ok(Self::new(
            mode.parse().map_err(|_| unknown())?,
            norm.parse().map_err(|_| unknown())?,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub assignment_mode: AssignmentMode,
    pub normalization: Normalization,
    pub weights: AssignmentWeights,
    pub tokenizer: TokenizerConfig,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            assignment_mode: AssignmentMode::MultiProp,
            normalization: Normalization::Max,
            weights: AssignmentWeights::default(),
            tokenizer: TokenizerConfig::default(),
        }
    }
}

impl MetricConfig {
    pub fn variant(&self) -> Variant {
        Variant::new(self.assignment_mode, self.normalization)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub pred: usize,
    pub gold: usize,
    /// Phase-two similarity of the pair.
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub value: f64,
    pub matched_pairs: Vec<MatchedPair>,
    pub m: usize,
    pub n: usize,
}

/// Unweighted mean of per-key Jaccard similarities over the union of keys
/// of the two records, the name and type included. Keys present on one
/// side only score zero.
pub fn pairwise_entity_similarity(e1: &EntityRecord, e2: &EntityRecord, tok: &TokenizerConfig) -> f64 {
    entity_similarity(&PreparedEntity::new(e1, tok), &PreparedEntity::new(e2, tok))
}

pub(crate) fn entity_similarity(a: &PreparedEntity, b: &PreparedEntity) -> f64 {
    let (sum, union) = a.other_similarity(b);
    ((a.name.jaccard(&b.name) + sum) / (union + 1) as f64).clamp(0.0, 1.0)
}

/// Scores one (prediction, target) pair under `config`.
pub fn aesop_score(pred: &EntitySet, gold: &EntitySet, config: &MetricConfig) -> SampleScore {
    let scorer = PairScorer::new(pred, gold, config);
    let matched = scorer.matched(config.assignment_mode);
    scorer.score(&matched, config.normalization)
}

/// All nine variants. Assignment is solved once per mode and the pair
/// similarities are shared across modes.
pub fn all_variants(
    pred: &EntitySet,
    gold: &EntitySet,
    weights: &AssignmentWeights,
    tok: &TokenizerConfig,
) -> BTreeMap<Variant, SampleScore> {
    let config = MetricConfig {
        weights: *weights,
        tokenizer: *tok,
        ..MetricConfig::default()
    };
    let scorer = PairScorer::new(pred, gold, &config);
    let mut out = BTreeMap::new();
    for mode in AssignmentMode::ALL {
        let matched = scorer.matched(mode);
        for norm in Normalization::ALL {
            out.insert(Variant::new(mode, norm), scorer.score(&matched, norm));
        }
    }
    out
}

/// Harmonic mean of precision and recall, zero when both are zero.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall <= 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub(crate) struct PairScorer {
    pred: Vec<PreparedEntity>,
    gold: Vec<PreparedEntity>,
    weights: AssignmentWeights,
    pair_similarity: std::cell::OnceCell<SimilarityMatrix>,
}

impl PairScorer {
    pub(crate) fn new(pred: &EntitySet, gold: &EntitySet, config: &MetricConfig) -> Self {
        Self {
            pred: PreparedEntity::prepare_all(pred, &config.tokenizer),
            gold: PreparedEntity::prepare_all(gold, &config.tokenizer),
            weights: config.weights,
            pair_similarity: std::cell::OnceCell::new(),
        }
    }

    fn pair_similarity(&self) -> &SimilarityMatrix {
        self.pair_similarity.get_or_init(|| {
            let values = self
                .pred
                .iter()
                .flat_map(|p| self.gold.iter().map(move |g| entity_similarity(p, g)))
                .collect();
            SimilarityMatrix::new(self.pred.len(), self.gold.len(), values).expect("similarities lie in [0, 1]")
        })
    }

    /// Optimal pairs under `mode`. Equally good assignments are separated
    /// by their total pair similarity, so the score does not depend on
    /// entity order.
    pub(crate) fn matched(&self, mode: AssignmentMode) -> Vec<MatchedPair> {
        let s = matrix_from_prepared(&self.pred, &self.gold, mode, &self.weights);
        let psi = self.pair_similarity();
        solve_assignment_with_tiebreak(&s, psi)
            .pairs
            .into_iter()
            .map(|(i, j)| MatchedPair {
                pred: i,
                gold: j,
                similarity: psi.get(i, j),
            })
            .collect()
    }

    pub(crate) fn score(&self, matched: &[MatchedPair], norm: Normalization) -> SampleScore {
        let total: f64 = matched.iter().map(|p| p.similarity).sum();
        let (m, n) = (self.pred.len(), self.gold.len());
        SampleScore {
            value: norm.apply(total, m, n),
            matched_pairs: matched.to_vec(),
            m,
            n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripletScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

type NormalizedTriplet = (Vec<String>, Vec<String>, Vec<String>);

fn normalize_triplet(t: &TripletRecord, tok: &TokenizerConfig) -> NormalizedTriplet {
    (
        tokenize(&t.subject, tok),
        tokenize(&t.relation, tok),
        tokenize(&t.object, tok),
    )
}

/// Exact-match triplet precision, recall and F1. Triplets are compared as
/// token lists; duplicates match one-to-one.
pub fn triplet_metrics(pred: &[TripletRecord], gold: &[TripletRecord], tok: &TokenizerConfig) -> TripletScores {
    let mut remaining: HashMap<NormalizedTriplet, usize> = HashMap::new();
    for t in gold {
        *remaining.entry(normalize_triplet(t, tok)).or_default() += 1;
    }
    let mut correct = 0usize;
    for t in pred {
        if let Some(count) = remaining.get_mut(&normalize_triplet(t, tok)) {
            if *count > 0 {
                *count -= 1;
                correct += 1;
            }
        }
    }
    let precision = Normalization::Precision.apply(correct as f64, pred.len(), gold.len());
    let recall = Normalization::Recall.apply(correct as f64, pred.len(), gold.len());
    TripletScores {
        precision,
        recall,
        f1: f1(precision, recall),
    }
}

/// Prefix for relations that would collide with reserved keys when a triplet
/// is turned into an entity.
pub const RELATION_KEY_PREFIX: &str = "rel:";

pub(crate) fn relation_key(relation: &str) -> String {
    if is_reserved_key(relation) {
        format!("{RELATION_KEY_PREFIX}{relation}")
    } else {
        relation.to_string()
    }
}

fn relation_of_key(key: &str) -> &str {
    match key.strip_prefix(RELATION_KEY_PREFIX) {
        Some(rest) if is_reserved_key(rest) => rest,
        _ => key,
    }
}

/// One single-property entity per triplet: subject as name, relation as
/// the key, object as the value.
pub fn triplet_entity(t: &TripletRecord) -> EntityRecord {
    let mut e = EntityRecord::new(t.subject.clone()).expect("triplet subjects are non-empty");
    e.insert_property(relation_key(&t.relation), t.object.clone())
        .expect("single property on a fresh record");
    e
}

/// Triplet precision and recall computed as an entity-set overlap: every
/// triplet becomes an entity, pairs score 1 only when subject, relation and
/// object all agree, and matched totals are divided by the predicted or
/// target count.
pub fn triplet_metrics_via_aesop(pred: &[TripletRecord], gold: &[TripletRecord], tok: &TokenizerConfig) -> (f64, f64) {
    let norm = |e: &EntityRecord| {
        let (key, value) = e.properties().first().expect("triplet entities carry one property");
        (
            tokenize(e.name(), tok),
            tokenize(relation_of_key(key), tok),
            tokenize(value, tok),
        )
    };
    let p: Vec<_> = pred.iter().map(|t| norm(&triplet_entity(t))).collect();
    let g: Vec<_> = gold.iter().map(|t| norm(&triplet_entity(t))).collect();

    // Every property (name and relation/object) must agree for a pair to
    // count; a single mismatch scores the pair zero in both phases.
    let values = p
        .iter()
        .flat_map(|a| g.iter().map(move |b| f64::from(u8::from(a == b))))
        .collect();
    let s = SimilarityMatrix::new(p.len(), g.len(), values).expect("0/1 cells");
    let total: f64 = solve_assignment(&s).pairs.iter().map(|&(i, j)| s.get(i, j)).sum();
    (
        Normalization::Precision.apply(total, p.len(), g.len()),
        Normalization::Recall.apply(total, p.len(), g.len()),
    )
}
