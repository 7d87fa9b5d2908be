//! Random entity sets, corpora and triplets for the integration tests.
#![allow(dead_code)]

use aesop_core::corpus::Sample;
use aesop_core::{EntityRecord, EntitySet, SimilarityMatrix, TripletRecord};
use rand::seq::SliceRandom;
use rand::Rng;

pub const WORDS: [&str; 24] = [
    "north", "river", "stone", "paris", "rome", "oslo", "lima", "red", "blue", "old", "new", "saint", "port", "king",
    "queen", "bay", "hill", "lake", "iron", "gold", "green", "east", "west", "field",
];
pub const NAMES: [&str; 12] = [
    "Alice",
    "Bob",
    "Carol Smith",
    "Dave",
    "Erin Stone",
    "Frank",
    "Grace Hill",
    "Heidi",
    "Ivan",
    "Judy",
    "Mallory",
    "Oscar Bay",
];
pub const TYPES: [&str; 4] = ["human", "city", "company", "country"];
pub const KEYS: [&str; 8] = [
    "country",
    "occupation",
    "location",
    "given name",
    "family name",
    "part of",
    "capital",
    "named after",
];

pub fn value(rng: &mut impl Rng) -> String {
    let n = rng.gen_range(1..=3);
    (0..n)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

/// An entity with a probable type and up to `max_props` distinct keys.
pub fn entity(rng: &mut impl Rng, max_props: usize) -> EntityRecord {
    let mut e = EntityRecord::new(*NAMES.choose(rng).unwrap()).unwrap();
    if rng.gen_bool(0.8) {
        e.set_type(Some(TYPES.choose(rng).unwrap().to_string()));
    }
    let count = rng.gen_range(0..=max_props.min(KEYS.len()));
    for key in KEYS.choose_multiple(rng, count) {
        e.insert_property(*key, value(rng)).unwrap();
    }
    e
}

pub fn entity_set(rng: &mut impl Rng, min: usize, max: usize) -> EntitySet {
    let n = rng.gen_range(min..=max);
    EntitySet::new((0..n).map(|_| entity(rng, 4)).collect())
}

/// A noisy copy of `gold`: entities dropped, values edited, extras added.
pub fn noisy_copy(rng: &mut impl Rng, gold: &EntitySet) -> EntitySet {
    let mut out = Vec::new();
    for e in gold {
        if rng.gen_bool(0.15) {
            continue;
        }
        let mut e = e.clone();
        let keys: Vec<String> = e.properties().keys().cloned().collect();
        for k in keys {
            if rng.gen_bool(0.3) {
                e.replace_property(&k, value(rng));
            }
        }
        out.push(e);
    }
    if rng.gen_bool(0.3) {
        out.push(entity(rng, 4));
    }
    EntitySet::new(out)
}

/// The same set with entity order and per-entity property order shuffled.
pub fn shuffled(rng: &mut impl Rng, set: &EntitySet) -> EntitySet {
    let mut records: Vec<EntityRecord> = set
        .iter()
        .map(|e| {
            let mut props: Vec<(&String, &String)> = e.properties().iter().collect();
            props.shuffle(rng);
            let mut copy = EntityRecord::new(e.name()).unwrap();
            copy.set_type(e.entity_type().map(str::to_string));
            for (k, v) in props {
                copy.insert_property(k.clone(), v.clone()).unwrap();
            }
            copy
        })
        .collect();
    records.shuffle(rng);
    EntitySet::new(records)
}

/// Mixes continuous cells with coarse values so that ties are common.
pub fn matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> SimilarityMatrix {
    let coarse = rng.gen_bool(0.5);
    let values = (0..rows * cols)
        .map(|_| {
            if coarse {
                f64::from(rng.gen_range(0u8..=4)) / 4.0
            } else {
                rng.gen::<f64>()
            }
        })
        .collect();
    SimilarityMatrix::new(rows, cols, values).unwrap()
}

pub fn triplets(rng: &mut impl Rng, max: usize) -> Vec<TripletRecord> {
    const SUBJECTS: [&str; 4] = ["Alice", "alice", "Bob", "Carol Smith"];
    const RELATIONS: [&str; 4] = ["country", "occupation", "type", "part of"];
    const OBJECTS: [&str; 4] = ["France", "france!", "Oslo", "New York"];
    let n = rng.gen_range(0..=max);
    (0..n)
        .map(|_| {
            TripletRecord::new(
                *SUBJECTS.choose(rng).unwrap(),
                *RELATIONS.choose(rng).unwrap(),
                *OBJECTS.choose(rng).unwrap(),
                None,
            )
            .unwrap()
        })
        .collect()
}

/// A corpus whose texts mention every property value, so that perturbation
/// finds occurrences to replace.
pub fn grounded_corpus(rng: &mut impl Rng, samples: usize) -> Vec<Sample> {
    (0..samples)
        .map(|i| {
            let entities = entity_set(rng, 1, 4);
            let text = entities
                .iter()
                .flat_map(|e| {
                    e.properties()
                        .iter()
                        .map(move |(k, v)| format!("The {k} of {} is {v}.", e.name()))
                })
                .collect::<Vec<_>>()
                .join(" ");
            Sample::new(format!("doc-{i}"), Some(text), entities)
        })
        .collect()
}
