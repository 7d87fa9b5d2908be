//! Entity similarity matrix and optimal one-to-one assignment.
//!
//! [`solve_assignment`] pads the matrix to square with zero-similarity
//! dummies and runs a shortest-augmenting-path Hungarian method. Ties among
//! optimal assignments are broken towards the lexicographically smallest
//! sorted pair list: every optimal assignment uses only edges that are
//! tight under the optimal dual potentials, so the tie-break is a greedy
//! search for the smallest perfect matching inside that tight subgraph.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::entity::{EntityRecord, EntitySet, TYPE_KEY};
use crate::error::{Error, Result};
use crate::text::{TokenSet, TokenizerConfig};

/// Reduced costs at or below this (relative to the largest cell) count as
/// tight, and objectives this close count as tied.
pub const TIE_TOLERANCE: f64 = 1e-10;

/// Largest `min(m, n)` accepted by [`brute_force_assignment`].
pub const BRUTE_FORCE_LIMIT: usize = 8;

/// How candidate pairs are scored before assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssignmentMode {
    /// 1 if the names are equal ignoring case, else 0.
    ExactName,
    /// Jaccard similarity of the names.
    ApproxName,
    /// Weighted name similarity plus mean similarity of the other properties.
    MultiProp,
}

impl AssignmentMode {
    pub const ALL: [AssignmentMode; 3] = [Self::ExactName, Self::ApproxName, Self::MultiProp];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::ExactName => "exactname",
            Self::ApproxName => "approxname",
            Self::MultiProp => "multiprop",
        }
    }
}

impl fmt::Display for AssignmentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AssignmentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::UnknownMetric(s.to_string()))
    }
}

/// Weights of the MultiProp assignment similarity. The non-name weight is
/// spread evenly over the union of non-name keys of the two entities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssignmentWeights {
    name_weight: f64,
    other_weight: f64,
}

impl AssignmentWeights {
    pub fn new(name_weight: f64, other_weight: f64) -> Result<Self> {
        if !name_weight.is_finite() || !other_weight.is_finite() {
            return Err(Error::InvalidWeights("weights must be finite".into()));
        }
        if name_weight < 0.0 || other_weight < 0.0 {
            return Err(Error::InvalidWeights(format!(
                "weights must be non-negative, got {name_weight} and {other_weight}"
            )));
        }
        if (name_weight + other_weight - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidWeights(format!(
                "weights must sum to 1, got {name_weight} + {other_weight}"
            )));
        }
        Ok(Self {
            name_weight,
            other_weight,
        })
    }

    pub fn from_name_weight(name_weight: f64) -> Result<Self> {
        Self::new(name_weight, 1.0 - name_weight)
    }

    pub fn name_weight(&self) -> f64 {
        self.name_weight
    }

    pub fn other_weight(&self) -> f64 {
        self.other_weight
    }
}

impl Default for AssignmentWeights {
    fn default() -> Self {
        Self {
            name_weight: 0.9,
            other_weight: 0.1,
        }
    }
}

/// Row-major `m x n` matrix of similarities in `[0, 1]`; rows index the
/// predicted set, columns the target set.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::InvalidMatrix(format!(
                "{} values for a {rows}x{cols} matrix",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidMatrix(format!("cell value {bad} outside [0, 1]")));
        }
        Ok(Self { rows, cols, values })
    }

    /// Builds from nested rows; `cols` is taken from the first row.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidMatrix("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// An `m x n` matrix with no cells (one side is empty) is still valid.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.rows && j < self.cols, "({i}, {j}) out of bounds");
        self.values[i * self.cols + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Matched `(row, column)` pairs sorted ascending, and their total similarity.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentResult {
    pub pairs: Vec<(usize, usize)>,
    pub objective: f64,
}

impl AssignmentResult {
    fn from_pairs(s: &SimilarityMatrix, mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_unstable();
        let objective = pairs.iter().map(|&(i, j)| s.get(i, j)).sum();
        Self { pairs, objective }
    }
}

/// Pre-tokenized view of a record. `others` holds the type (under `"type"`)
/// and every property, sorted by key.
#[derive(Debug, Clone)]
pub(crate) struct PreparedEntity {
    pub(crate) folded_name: String,
    pub(crate) name: TokenSet,
    pub(crate) others: Vec<(String, TokenSet)>,
}

impl PreparedEntity {
    pub(crate) fn new(record: &EntityRecord, tok: &TokenizerConfig) -> Self {
        let mut others: Vec<(String, TokenSet)> = record
            .properties()
            .iter()
            .map(|(k, v)| (k.clone(), TokenSet::new(v, tok)))
            .collect();
        if let Some(t) = record.entity_type() {
            others.push((TYPE_KEY.to_string(), TokenSet::new(t, tok)));
        }
        others.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        Self {
            folded_name: record.name().to_lowercase(),
            name: TokenSet::new(record.name(), tok),
            others,
        }
    }

    pub(crate) fn prepare_all(set: &EntitySet, tok: &TokenizerConfig) -> Vec<Self> {
        set.iter().map(|r| Self::new(r, tok)).collect()
    }

    /// Sum of per-key Jaccard scores over the union of non-name keys, and
    /// the size of that union. Keys present on one side only score zero.
    pub(crate) fn other_similarity(&self, other: &PreparedEntity) -> (f64, usize) {
        let (a, b) = (&self.others, &other.others);
        let (mut i, mut j) = (0, 0);
        let (mut sum, mut union) = (0.0, 0usize);
        while i < a.len() || j < b.len() {
            union += 1;
            match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) if x.0 == y.0 => {
                    sum += x.1.jaccard(&y.1);
                    i += 1;
                    j += 1;
                }
                (Some(x), Some(y)) if x.0 < y.0 => i += 1,
                (Some(_), None) => i += 1,
                _ => j += 1,
            }
        }
        (sum, union)
    }

    pub(crate) fn assignment_similarity(
        &self,
        other: &PreparedEntity,
        mode: AssignmentMode,
        weights: &AssignmentWeights,
    ) -> f64 {
        match mode {
            AssignmentMode::ExactName => f64::from(u8::from(self.folded_name == other.folded_name)),
            AssignmentMode::ApproxName => self.name.jaccard(&other.name),
            AssignmentMode::MultiProp => {
                let (sum, union) = self.other_similarity(other);
                let rest = if union == 0 { 0.0 } else { sum / union as f64 };
                let v = weights.name_weight * self.name.jaccard(&other.name) + weights.other_weight * rest;
                v.clamp(0.0, 1.0)
            }
        }
    }
}

pub(crate) fn matrix_from_prepared(
    pred: &[PreparedEntity],
    gold: &[PreparedEntity],
    mode: AssignmentMode,
    weights: &AssignmentWeights,
) -> SimilarityMatrix {
    let values = pred
        .iter()
        .flat_map(|p| gold.iter().map(move |g| p.assignment_similarity(g, mode, weights)))
        .collect();
    SimilarityMatrix {
        rows: pred.len(),
        cols: gold.len(),
        values,
    }
}

/// Scores every (predicted, target) pair for assignment.
pub fn build_similarity_matrix(
    pred: &EntitySet,
    gold: &EntitySet,
    mode: AssignmentMode,
    weights: &AssignmentWeights,
    tok: &TokenizerConfig,
) -> Result<SimilarityMatrix> {
    // re-validate: the fields are private but the struct is deserializable
    let weights = AssignmentWeights::new(weights.name_weight, weights.other_weight)?;
    let p = PreparedEntity::prepare_all(pred, tok);
    let g = PreparedEntity::prepare_all(gold, tok);
    Ok(matrix_from_prepared(&p, &g, mode, &weights))
}

/// Maximum-similarity assignment of exactly `min(m, n)` pairs.
pub fn solve_assignment(s: &SimilarityMatrix) -> AssignmentResult {
    solve(s, None)
}

/// Like [`solve_assignment`], but among assignments with optimal total
/// similarity picks one maximizing the total of `secondary`; remaining ties
/// go to the lexicographically smallest pair list.
///
/// # Panics
///
/// Panics if the two matrices differ in shape.
pub fn solve_assignment_with_tiebreak(s: &SimilarityMatrix, secondary: &SimilarityMatrix) -> AssignmentResult {
    assert_eq!(
        (s.rows, s.cols),
        (secondary.rows, secondary.cols),
        "matrix shapes differ"
    );
    solve(s, Some(secondary))
}

fn solve(s: &SimilarityMatrix, secondary: Option<&SimilarityMatrix>) -> AssignmentResult {
    let k = s.rows.max(s.cols);
    if s.rows == 0 || s.cols == 0 {
        return AssignmentResult {
            pairs: Vec::new(),
            objective: 0.0,
        };
    }
    let real = |i: usize, j: usize| i < s.rows && j < s.cols;
    let cost = |i: usize, j: usize| if real(i, j) { -s.get(i, j) } else { 0.0 };
    let duals = hungarian(k, cost);
    let tol = TIE_TOLERANCE * s.max_value().max(1.0);
    let tight = |i: usize, j: usize| cost(i, j) - duals.row[i] - duals.col[j] <= tol;

    let row_match = match secondary {
        None => lexicographic_matching(k, s.rows, &duals.row_match, tight),
        Some(sec) => {
            // Re-optimize `sec` over the optimal face of the first problem:
            // edges outside it cost more than any all-tight matching.
            let outside = k as f64 + 1.0;
            let cost2 = |i: usize, j: usize| {
                if !tight(i, j) {
                    outside
                } else if real(i, j) {
                    -sec.get(i, j)
                } else {
                    0.0
                }
            };
            let duals2 = hungarian(k, cost2);
            let tol2 = TIE_TOLERANCE * outside;
            let tight2 = |i: usize, j: usize| tight(i, j) && cost2(i, j) - duals2.row[i] - duals2.col[j] <= tol2;
            lexicographic_matching(k, s.rows, &duals2.row_match, tight2)
        }
    };
    let pairs = row_match
        .into_iter()
        .enumerate()
        .take(s.rows)
        .filter(|&(i, j)| real(i, j))
        .collect();
    AssignmentResult::from_pairs(s, pairs)
}

struct Duals {
    row: Vec<f64>,
    col: Vec<f64>,
    row_match: Vec<usize>,
}

/// Square minimum-cost assignment with dual potentials such that
/// `cost(i, j) - row[i] - col[j] >= 0`, with equality on matched cells.
fn hungarian(k: usize, cost: impl Fn(usize, usize) -> f64) -> Duals {
    // 1-based internally; index 0 is the virtual source column.
    let mut u = vec![0.0; k + 1];
    let mut v = vec![0.0; k + 1];
    let mut col_owner = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for i in 1..=k {
        col_owner[0] = i;
        let mut j0 = 0;
        let mut min_slack = vec![f64::INFINITY; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=k {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < min_slack[j] {
                    min_slack[j] = cur;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_match = vec![0; k];
    for j in 1..=k {
        row_match[col_owner[j] - 1] = j - 1;
    }
    Duals {
        row: u[1..].to_vec(),
        col: v[1..].to_vec(),
        row_match,
    }
}

/// Lexicographically smallest perfect matching in the tight subgraph,
/// starting from a known perfect matching. Only the first `rows` rows are
/// constrained; later rows are padding.
fn lexicographic_matching(
    k: usize,
    rows: usize,
    initial: &[usize],
    tight: impl Fn(usize, usize) -> bool,
) -> Vec<usize> {
    let mut row_match = initial.to_vec();
    let mut col_match = vec![0; k];
    for (i, &j) in row_match.iter().enumerate() {
        col_match[j] = i;
    }
    let mut locked_row = vec![false; k];
    let mut locked_col = vec![false; k];
    for i in 0..rows {
        for j in 0..k {
            if locked_col[j] || !tight(i, j) {
                continue;
            }
            if row_match[i] == j {
                break;
            }
            // Force (i, j): the row holding j must reach i's old column.
            let freed = row_match[i];
            let displaced = col_match[j];
            locked_row[i] = true;
            locked_col[j] = true;
            let mut seen = vec![false; k];
            let mut trial_rows = row_match.clone();
            let mut trial_cols = col_match.clone();
            trial_rows[i] = j;
            trial_cols[j] = i;
            let ok = augment(
                displaced,
                freed,
                &tight,
                &locked_row,
                &locked_col,
                &mut seen,
                &mut trial_rows,
                &mut trial_cols,
            );
            locked_row[i] = false;
            locked_col[j] = false;
            if ok {
                row_match = trial_rows;
                col_match = trial_cols;
                break;
            }
        }
        locked_row[i] = true;
        locked_col[row_match[i]] = true;
    }
    row_match
}

/// Alternating-path search from an unmatched row to the single free column.
#[allow(clippy::too_many_arguments)]
fn augment(
    row: usize,
    free_col: usize,
    tight: &impl Fn(usize, usize) -> bool,
    locked_row: &[bool],
    locked_col: &[bool],
    seen: &mut [bool],
    row_match: &mut [usize],
    col_match: &mut [usize],
) -> bool {
    for c in 0..seen.len() {
        if seen[c] || locked_col[c] || !tight(row, c) {
            continue;
        }
        seen[c] = true;
        let reachable = c == free_col || {
            let next = col_match[c];
            !locked_row[next]
                && augment(
                    next, free_col, tight, locked_row, locked_col, seen, row_match, col_match,
                )
        };
        if reachable {
            row_match[row] = c;
            col_match[c] = row;
            return true;
        }
    }
    false
}

/// Exhaustive reference solver: enumerates every injection of the smaller
/// index set into the larger one. Same tie-break as [`solve_assignment`].
pub fn brute_force_assignment(s: &SimilarityMatrix) -> Result<AssignmentResult> {
    brute_force(s, None)
}

/// Exhaustive counterpart of [`solve_assignment_with_tiebreak`].
pub fn brute_force_assignment_with_tiebreak(
    s: &SimilarityMatrix,
    secondary: &SimilarityMatrix,
) -> Result<AssignmentResult> {
    assert_eq!(
        (s.rows, s.cols),
        (secondary.rows, secondary.cols),
        "matrix shapes differ"
    );
    brute_force(s, Some(secondary))
}

fn brute_force(s: &SimilarityMatrix, secondary: Option<&SimilarityMatrix>) -> Result<AssignmentResult> {
    let small = s.rows.min(s.cols);
    if small > BRUTE_FORCE_LIMIT {
        return Err(Error::DimensionTooLarge {
            limit: BRUTE_FORCE_LIMIT,
            actual: small,
        });
    }
    let transpose = s.rows > s.cols;
    let large = s.rows.max(s.cols);
    let tol = TIE_TOLERANCE * s.max_value().max(1.0);
    let tol2 = TIE_TOLERANCE * (large as f64 + 1.0);

    // (result, secondary total)
    let mut best: Option<(AssignmentResult, f64)> = None;
    let mut chosen = Vec::with_capacity(small);
    let mut used = vec![false; large];
    enumerate_injections(small, large, &mut chosen, &mut used, &mut |image| {
        let pairs = image
            .iter()
            .enumerate()
            .map(|(a, &b)| if transpose { (b, a) } else { (a, b) })
            .collect();
        let candidate = AssignmentResult::from_pairs(s, pairs);
        let second: f64 = secondary.map_or(0.0, |m| candidate.pairs.iter().map(|&(i, j)| m.get(i, j)).sum());
        let better = match &best {
            None => true,
            Some((b, b2)) => {
                if candidate.objective > b.objective + tol {
                    true
                } else if (candidate.objective - b.objective).abs() <= tol {
                    second > b2 + tol2 || ((second - b2).abs() <= tol2 && candidate.pairs < b.pairs)
                } else {
                    false
                }
            }
        };
        if better {
            best = Some((candidate, second));
        }
    });
    Ok(best.map(|b| b.0).unwrap_or(AssignmentResult {
        pairs: Vec::new(),
        objective: 0.0,
    }))
}

fn enumerate_injections(
    small: usize,
    large: usize,
    chosen: &mut Vec<usize>,
    used: &mut [bool],
    visit: &mut impl FnMut(&[usize]),
) {
    if chosen.len() == small {
        visit(chosen);
        return;
    }
    for b in 0..large {
        if used[b] {
            continue;
        }
        used[b] = true;
        chosen.push(b);
        enumerate_injections(small, large, chosen, used, visit);
        chosen.pop();
        used[b] = false;
    }
}
