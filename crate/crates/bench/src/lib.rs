//! Seeded synthetic corpora for benchmarking.

use aesop_core::corpus::Sample;
use aesop_core::{EntityRecord, EntitySet, SimilarityMatrix};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: [&str; 16] = [
    "north", "river", "stone", "paris", "rome", "oslo", "lima", "red", "blue", "old", "new", "saint", "port", "king",
    "queen", "bay",
];
const TYPES: [&str; 4] = ["human", "city", "company", "country"];
const KEYS: [&str; 8] = [
    "country",
    "occupation",
    "location",
    "given name",
    "family name",
    "part of",
    "capital",
    "named after",
];

fn phrase(rng: &mut impl Rng, max_words: usize) -> String {
    let n = rng.gen_range(1..=max_words);
    (0..n)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

fn entity(rng: &mut impl Rng, properties: usize) -> EntityRecord {
    let mut e = EntityRecord::new(phrase(rng, 2)).unwrap();
    e.set_type(Some(TYPES.choose(rng).unwrap().to_string()));
    for key in KEYS.choose_multiple(rng, properties) {
        e.insert_property(*key, phrase(rng, 3)).unwrap();
    }
    e
}

/// A random entity set with `entities` records of `properties` keys each.
pub fn entity_set(rng: &mut impl Rng, entities: usize, properties: usize) -> EntitySet {
    EntitySet::new((0..entities).map(|_| entity(rng, properties)).collect())
}

/// Gold and prediction corpora of `samples` pairs, 2 to 6 entities (mean
/// 4) with 3 properties each. Predictions drop and edit some entities.
pub fn corpus_pair(samples: usize, seed: u64) -> (Vec<Sample>, Vec<Sample>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gold = Vec::with_capacity(samples);
    let mut pred = Vec::with_capacity(samples);
    for i in 0..samples {
        let n = rng.gen_range(2..=6);
        let set = entity_set(&mut rng, n, 3);
        let mut guess: Vec<EntityRecord> = set.iter().filter(|_| rng.gen_bool(0.85)).cloned().collect();
        for e in &mut guess {
            if rng.gen_bool(0.3) {
                let key = e.properties().keys().next().cloned().unwrap();
                e.replace_property(&key, phrase(&mut rng, 3));
            }
        }
        pred.push(Sample::new(format!("s{i}"), None, EntitySet::new(guess)));
        gold.push(Sample::new(format!("s{i}"), None, set));
    }
    (gold, pred)
}

pub fn random_matrix(size: usize, seed: u64) -> SimilarityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SimilarityMatrix::new(size, size, (0..size * size).map(|_| rng.gen()).collect()).unwrap()
}
