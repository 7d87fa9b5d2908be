//! Grounding-check corpora: property values are swapped for values of the
//! same (entity type, property key) taken from other entities, in both the
//! gold entity sets and the passage text.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adapters::UNKNOWN_TYPE;
use crate::corpus::Sample;
use crate::error::{Error, Result};
use crate::text::{TokenSet, TokenizerConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolEntry {
    pub value: String,
    /// Names of the entities carrying this value.
    pub sources: BTreeSet<String>,
}

/// Distinct property values per (entity type, property key), in order of
/// first appearance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PerturbationCatalog {
    pools: BTreeMap<(String, String), Vec<PoolEntry>>,
}

impl PerturbationCatalog {
    pub fn pool(&self, entity_type: &str, key: &str) -> Option<&[PoolEntry]> {
        self.pools
            .get(&(entity_type.to_string(), key.to_string()))
            .map(Vec::as_slice)
    }

    pub fn pools(&self) -> impl Iterator<Item = (&(String, String), &[PoolEntry])> {
        self.pools.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn is_empty(&self) -> bool {
        self.pools.is_empty()
    }

    /// Replacement values for `old` held by `entity`: other values of the
    /// pool carried by at least one differently named entity and not
    /// token-equivalent to `old`.
    pub fn alternatives(&self, entity_type: &str, key: &str, entity: &str, old: &str) -> Vec<&str> {
        let tok = TokenizerConfig::default();
        let old_tokens = TokenSet::new(old, &tok);
        self.pool(entity_type, key)
            .unwrap_or_default()
            .iter()
            .filter(|e| e.value != old && e.sources.iter().any(|s| s != entity))
            .filter(|e| TokenSet::new(&e.value, &tok) != old_tokens)
            .map(|e| e.value.as_str())
            .collect()
    }
}

pub fn build_catalog(corpus: &[Sample]) -> PerturbationCatalog {
    let mut pools: BTreeMap<(String, String), Vec<PoolEntry>> = BTreeMap::new();
    for sample in corpus {
        for entity in &sample.entities {
            let ty = entity.entity_type().unwrap_or(UNKNOWN_TYPE);
            for (key, value) in entity.properties() {
                let pool = pools.entry((ty.to_string(), key.clone())).or_default();
                match pool.iter_mut().find(|e| e.value == *value) {
                    Some(e) => {
                        e.sources.insert(entity.name().to_string());
                    }
                    None => pool.push(PoolEntry {
                        value: value.clone(),
                        sources: BTreeSet::from([entity.name().to_string()]),
                    }),
                }
            }
        }
    }
    PerturbationCatalog { pools }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationConfig {
    seed: u64,
    rate: f64,
    require_text_match: bool,
}

impl PerturbationConfig {
    pub fn new(seed: u64, rate: f64, require_text_match: bool) -> Result<Self> {
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::InvalidPerturbation(format!("rate {rate} outside [0, 1]")));
        }
        Ok(Self {
            seed,
            rate,
            require_text_match,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn require_text_match(&self) -> bool {
        self.require_text_match
    }
}

/// One replaced property value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeRecord {
    pub sample_id: String,
    pub entity_index: usize,
    pub entity_name: String,
    pub key: String,
    pub old: String,
    pub new: String,
    /// Byte offsets of the replaced occurrences in the original text.
    pub original_offsets: Vec<usize>,
    /// Byte offsets of the inserted value in the perturbed text.
    pub offsets: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedCorpus {
    pub samples: Vec<Sample>,
    pub changes: Vec<ChangeRecord>,
}

/// Byte offsets of `needle` in `haystack` that are not preceded or followed
/// by an alphanumeric character.
pub fn token_boundary_matches(haystack: &str, needle: &str) -> Vec<usize> {
    if needle.is_empty() {
        return Vec::new();
    }
    haystack
        .match_indices(needle)
        .map(|(start, _)| start)
        .filter(|&start| {
            let before = haystack[..start].chars().next_back();
            let after = haystack[start + needle.len()..].chars().next();
            !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
        })
        .collect()
}

/// Applies seeded value swaps to `corpus`.
///
/// Candidates are visited in (sample, entity, sorted key) order. A value is
/// eligible when the catalog has an alternative for it and, if text match
/// is required, it occurs in the passage. Each eligible value is selected
/// with probability `rate`; the replacement is drawn uniformly from the
/// alternatives. All occurrences are replaced against the original text at
/// once, so two values swapping places do not interfere. When one value is
/// perturbed twice in a sample the first replacement is reused so text and
/// gold stay consistent.
pub fn perturb_corpus(
    corpus: &[Sample],
    catalog: &PerturbationCatalog,
    config: &PerturbationConfig,
) -> PerturbedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut samples = Vec::with_capacity(corpus.len());
    let mut changes = Vec::new();
    for sample in corpus {
        let (perturbed, mut sample_changes) = perturb_sample(sample, catalog, config, &mut rng);
        samples.push(perturbed);
        changes.append(&mut sample_changes);
    }
    PerturbedCorpus { samples, changes }
}

struct Span {
    start: usize,
    end: usize,
    replacement: usize,
}

fn perturb_sample(
    sample: &Sample,
    catalog: &PerturbationCatalog,
    config: &PerturbationConfig,
    rng: &mut ChaCha8Rng,
) -> (Sample, Vec<ChangeRecord>) {
    let text = sample.text.as_deref().unwrap_or("");
    let mut out = sample.clone();
    // replacement values, indexed by `Span::replacement`
    let mut replacements: Vec<String> = Vec::new();
    let mut spans: Vec<Span> = Vec::new();
    let mut reused: HashMap<String, usize> = HashMap::new();
    // (change, replacement index) so offsets can be filled in afterwards
    let mut pending: Vec<(ChangeRecord, usize)> = Vec::new();

    for (index, entity) in sample.entities.iter().enumerate() {
        let ty = entity.entity_type().unwrap_or(UNKNOWN_TYPE);
        let mut keys: Vec<&String> = entity.properties().keys().collect();
        keys.sort_unstable();
        for key in keys {
            let old = &entity.properties()[key];
            let alternatives = catalog.alternatives(ty, key, entity.name(), old);
            if alternatives.is_empty() {
                continue;
            }
            let occurrences = token_boundary_matches(text, old);
            if config.require_text_match && occurrences.is_empty() {
                continue;
            }
            if rng.gen::<f64>() >= config.rate {
                continue;
            }
            let drawn = alternatives[rng.gen_range(0..alternatives.len())];

            let replacement = match reused.get(old.as_str()) {
                Some(&r) => {
                    if !alternatives.contains(&replacements[r].as_str()) {
                        continue;
                    }
                    r
                }
                None => {
                    let free: Vec<usize> = occurrences
                        .into_iter()
                        .filter(|&s| {
                            let e = s + old.len();
                            spans.iter().all(|c| e <= c.start || s >= c.end)
                        })
                        .collect();
                    if config.require_text_match && free.is_empty() {
                        continue;
                    }
                    let r = replacements.len();
                    replacements.push(drawn.to_string());
                    spans.extend(free.into_iter().map(|s| Span {
                        start: s,
                        end: s + old.len(),
                        replacement: r,
                    }));
                    reused.insert(old.clone(), r);
                    r
                }
            };
            let new = replacements[replacement].clone();
            out.entities.records_mut()[index].replace_property(key, new.clone());
            pending.push((
                ChangeRecord {
                    sample_id: sample.id.clone(),
                    entity_index: index,
                    entity_name: entity.name().to_string(),
                    key: key.clone(),
                    old: old.clone(),
                    new,
                    original_offsets: Vec::new(),
                    offsets: Vec::new(),
                },
                replacement,
            ));
        }
    }

    if !spans.is_empty() {
        spans.sort_unstable_by_key(|s| s.start);
        let mut rewritten = String::with_capacity(text.len());
        let mut new_offsets: Vec<Vec<(usize, usize)>> = vec![Vec::new(); replacements.len()];
        let mut cursor = 0;
        for span in &spans {
            rewritten.push_str(&text[cursor..span.start]);
            new_offsets[span.replacement].push((span.start, rewritten.len()));
            rewritten.push_str(&replacements[span.replacement]);
            cursor = span.end;
        }
        rewritten.push_str(&text[cursor..]);
        out.text = Some(rewritten);
        for (change, r) in &mut pending {
            change.original_offsets = new_offsets[*r].iter().map(|p| p.0).collect();
            change.offsets = new_offsets[*r].iter().map(|p| p.1).collect();
        }
    }
    (out, pending.into_iter().map(|(c, _)| c).collect())
}
