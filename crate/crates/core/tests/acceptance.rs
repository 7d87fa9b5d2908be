//! Acceptance checks. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits non-zero if any criterion fails.

// negated comparisons make NaN fail a check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use aesop_core::adapters::{WIKIDATA_ENTITY_TYPES, WIKIDATA_PROPERTY_KEYS};
use aesop_core::corpus::Sample;
use aesop_core::correlation::Coefficient;
use aesop_core::report::Metric;
use aesop_core::{
    aesop_score, all_variants, brute_force_assignment, build_catalog, builtin_wikidata_schema, correlate_variants,
    evaluate_corpus, parse_entity_set, perturb_corpus, serialize_entity_set, solve_assignment, triplet_metrics,
    triplet_metrics_via_aesop, AssignmentWeights, EntitySet, MetricConfig, Normalization, PerturbationConfig,
    TokenizerConfig, TripletRecord, Variant,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn variants(pred: &EntitySet, gold: &EntitySet) -> Vec<(Variant, f64)> {
    all_variants(pred, gold, &AssignmentWeights::default(), &TokenizerConfig::default())
        .into_iter()
        .map(|(v, s)| (v, s.value))
        .collect()
}

fn assignment_optimality() -> Outcome {
    let mut rng = rng(1);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for case in 0..500 {
        let (m, n) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let s = common::matrix(&mut rng, m, n);
        let fast = solve_assignment(&s);
        let slow = brute_force_assignment(&s).map_err(|e| e.to_string())?;
        let gap = (fast.objective - slow.objective).abs();
        worst = worst.max(gap);
        ensure!(
            gap <= 1e-12,
            "case {case}: objective {} vs brute force {}",
            fast.objective,
            slow.objective
        );
        ensure!(
            fast.pairs.len() == m.min(n),
            "case {case}: {} pairs for {m}x{n}",
            fast.pairs.len()
        );
        let mut rows: Vec<usize> = fast.pairs.iter().map(|p| p.0).collect();
        let mut cols: Vec<usize> = fast.pairs.iter().map(|p| p.1).collect();
        ensure!(
            rows.iter().all(|&i| i < m) && cols.iter().all(|&j| j < n),
            "case {case}: index out of range"
        );
        rows.dedup();
        cols.sort_unstable();
        cols.dedup();
        ensure!(rows.len() == fast.pairs.len(), "case {case}: row used twice");
        ensure!(cols.len() == fast.pairs.len(), "case {case}: column used twice");
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!("500 matrices, max objective gap {worst:.1e}, {elapsed:.2?}"))
}

fn identity_and_bounds() -> Outcome {
    let mut rng = rng(2);
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let set = common::entity_set(&mut rng, 1, 6);
        for (v, value) in variants(&set, &set) {
            worst = worst.max((value - 1.0).abs());
            ensure!((value - 1.0).abs() <= 1e-9, "case {case}: {v}(E, E) = {value}");
        }
    }
    for case in 0..1000 {
        let pred = common::entity_set(&mut rng, 0, 6);
        let gold = common::entity_set(&mut rng, 0, 6);
        for (v, value) in variants(&pred, &gold) {
            ensure!((0.0..=1.0).contains(&value), "case {case}: {v} = {value}");
        }
    }
    Ok(format!(
        "200 identity sets (max deviation {worst:.1e}), 1000 pairs in [0, 1]"
    ))
}

fn order_invariance() -> Outcome {
    let mut rng = rng(3);
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let gold = common::entity_set(&mut rng, 0, 6);
        let pred = if rng.gen_bool(0.5) {
            common::noisy_copy(&mut rng, &gold)
        } else {
            common::entity_set(&mut rng, 0, 6)
        };
        let base = variants(&pred, &gold);
        let moved = variants(&common::shuffled(&mut rng, &pred), &common::shuffled(&mut rng, &gold));
        ensure!(base.len() == 9, "expected 9 variants, got {}", base.len());
        for ((v, a), (_, b)) in base.iter().zip(&moved) {
            worst = worst.max((a - b).abs());
            ensure!((a - b).abs() < 1e-12, "case {case}: {v} changed from {a} to {b}");
        }
    }
    Ok(format!("200 instances x 9 variants, max change {worst:.1e}"))
}

fn triplet_equivalence() -> Outcome {
    let mut rng = rng(4);
    let tok = TokenizerConfig::default();
    for case in 0..100 {
        let pred = common::triplets(&mut rng, 6);
        let gold = common::triplets(&mut rng, 6);
        let direct = triplet_metrics(&pred, &gold, &tok);
        let (p, r) = triplet_metrics_via_aesop(&pred, &gold, &tok);
        ensure!(
            p == direct.precision && r == direct.recall,
            "case {case}: aesop ({p}, {r}) vs triplet ({}, {})",
            direct.precision,
            direct.recall
        );
    }
    let gold: Vec<TripletRecord> = (0..19)
        .map(|i| TripletRecord::new(format!("entity {i}"), "relation", format!("value {i}"), None).unwrap())
        .collect();
    let pred = gold[..10].to_vec();
    let (p, r) = triplet_metrics_via_aesop(&pred, &gold, &tok);
    ensure!((p - 1.0).abs() < 1e-12, "worked case precision {p}");
    ensure!((r - 0.5263).abs() <= 1e-4, "worked case recall {r}");
    Ok(format!(
        "100 random instances equal; 19 gold / 10 correct: precision {p:.3}, recall {r:.4}"
    ))
}

fn normalization_dominance() -> Outcome {
    let mut rng = rng(5);
    for case in 0..1000 {
        let pred = common::entity_set(&mut rng, 0, 6);
        let gold = common::entity_set(&mut rng, 0, 6);
        let scores = variants(&pred, &gold);
        let get = |v: Variant| scores.iter().find(|(x, _)| *x == v).unwrap().1;
        for mode in aesop_core::AssignmentMode::ALL {
            let max = get(Variant::new(mode, Normalization::Max));
            let p = get(Variant::new(mode, Normalization::Precision));
            let r = get(Variant::new(mode, Normalization::Recall));
            ensure!(max <= p.min(r), "case {case}: {mode} max {max} > min({p}, {r})");
        }
    }
    Ok("1000 instances, 3 modes".into())
}

fn listing_fixtures() -> Outcome {
    let mut lines = Vec::new();
    for (label, text, count, first) in [
        (
            "MuSEE",
            include_str!("fixtures/musee_listing.json"),
            7,
            "Peter the Great",
        ),
        (
            "GenIE",
            include_str!("fixtures/genie_listing.json"),
            2,
            "Bartolomeo Rastrelli",
        ),
    ] {
        let set = parse_entity_set(text).map_err(|e| format!("{label}: {e}"))?;
        ensure!(set.len() == count, "{label}: {} entities, expected {count}", set.len());
        let name = set.get(0).map(|e| e.name().to_string()).unwrap_or_default();
        ensure!(name == first, "{label}: record 0 is `{name}`");
        let written = serialize_entity_set(&set);
        let back = parse_entity_set(&written).map_err(|e| format!("{label} round trip: {e}"))?;
        ensure!(back == set, "{label}: round trip changed the set");
        let original: serde_json::Value = serde_json::from_str(text).unwrap();
        let rewritten: serde_json::Value = serde_json::from_str(&written).unwrap();
        ensure!(
            original == rewritten,
            "{label}: serialized document differs from the listing"
        );
        lines.push(format!("{label} {count} entities"));
    }
    Ok(format!("{}, both round-trip", lines.join(", ")))
}

fn perturbation() -> Outcome {
    let mut rng = rng(7);
    let corpus = common::grounded_corpus(&mut rng, 300);
    let catalog = build_catalog(&corpus);
    let config = |seed, rate| PerturbationConfig::new(seed, rate, true).unwrap();
    let serialize = |samples: &[Sample]| samples.iter().map(Sample::to_json_line).collect::<Vec<_>>().join("\n");

    let zero = perturb_corpus(&corpus, &catalog, &config(9, 0.0));
    ensure!(
        zero.changes.is_empty(),
        "rate 0 produced {} changes",
        zero.changes.len()
    );
    ensure!(serialize(&zero.samples) == serialize(&corpus), "rate 0 output differs");

    let first = perturb_corpus(&corpus, &catalog, &config(42, 0.5));
    let second = perturb_corpus(&corpus, &catalog, &config(42, 0.5));
    let log = |c: &[aesop_core::perturb::ChangeRecord]| serde_json::to_string(c).unwrap();
    ensure!(
        serialize(&first.samples) == serialize(&second.samples) && log(&first.changes) == log(&second.changes),
        "same seed gave different output"
    );
    ensure!(!first.changes.is_empty(), "no changes at rate 0.5");

    let mut touched = 0;
    for (orig, new) in corpus.iter().zip(&first.samples) {
        ensure!(
            orig.entities.len() == new.entities.len(),
            "{}: entity count changed",
            orig.id
        );
        for (a, b) in orig.entities.iter().zip(&new.entities) {
            ensure!(
                a.name() == b.name()
                    && a.entity_type() == b.entity_type()
                    && a.properties().keys().eq(b.properties().keys()),
                "{}: structure of `{}` changed",
                orig.id,
                a.name()
            );
        }
        if first.changes.iter().any(|c| c.sample_id == orig.id) {
            touched += 1;
            let score = aesop_score(&new.entities, &orig.entities, &MetricConfig::default()).value;
            ensure!(score < 1.0, "{}: perturbed gold still scores {score}", orig.id);
        } else {
            ensure!(orig == new, "{}: changed without a change record", orig.id);
        }
    }
    Ok(format!(
        "rate 0 identical, seed reproducible, {} changes in {touched} samples all below 1",
        first.changes.len()
    ))
}

fn builtin_schema() -> Outcome {
    let types = [
        "talk",
        "system",
        "spatio-temporal entity",
        "product",
        "natural object",
        "human",
        "geographical feature",
        "corporate body",
        "concrete object",
        "artificial object",
    ];
    let keys = [
        "capital",
        "family name",
        "place of death",
        "part of",
        "location",
        "country",
        "given name",
        "languages spoken, written or signed",
        "occupation",
        "named after",
    ];
    ensure!(
        WIKIDATA_ENTITY_TYPES == types,
        "entity types differ: {WIKIDATA_ENTITY_TYPES:?}"
    );
    ensure!(
        WIKIDATA_PROPERTY_KEYS == keys,
        "property keys differ: {WIKIDATA_PROPERTY_KEYS:?}"
    );
    let schema = builtin_wikidata_schema();
    ensure!(
        schema.entity_types.len() == 10 && schema.entity_types.iter().all(|t| types.contains(&t.as_str())),
        "schema types: {:?}",
        schema.entity_types
    );
    ensure!(
        schema.property_keys.len() == 10 && schema.property_keys.iter().all(|k| keys.contains(&k.as_str())),
        "schema keys: {:?}",
        schema.property_keys
    );
    Ok("10 entity types, 10 property keys".into())
}

fn correlation_sanity() -> Outcome {
    let mut rng = rng(10);
    let gold: Vec<Sample> = (0..60)
        .map(|i| Sample::new(format!("s{i}"), None, common::entity_set(&mut rng, 1, 5)))
        .collect();
    let pred: Vec<Sample> = gold
        .iter()
        .map(|g| Sample::new(g.id.clone(), None, common::noisy_copy(&mut rng, &g.entities)))
        .collect();
    let report = evaluate_corpus(&gold, &pred, &MetricConfig::default(), &[]).map_err(|e| e.to_string())?;
    let corr = correlate_variants(&report, &[]).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for a in &corr.metrics {
        let column = report.column(a).unwrap();
        let varies = column.iter().any(|v| *v != column[0]);
        let own = corr.get(a, a).unwrap();
        if varies {
            ensure!(
                own.pearson == Coefficient::Value(1.0) && own.spearman == Coefficient::Value(1.0),
                "{a}: self correlation {:?} / {:?}",
                own.pearson,
                own.spearman
            );
            checked += 1;
        }
        for b in &corr.metrics {
            let (ab, ba) = (corr.get(a, b).unwrap(), corr.get(b, a).unwrap());
            ensure!(
                ab.pearson == ba.pearson && ab.spearman == ba.spearman,
                "{a} / {b} not symmetric"
            );
        }
    }
    ensure!(checked > 0, "no metric varies");
    Ok(format!(
        "{checked} varying metrics with r = rho = 1 on the diagonal, matrix symmetric"
    ))
}

fn throughput() -> Outcome {
    let mut rng = rng(11);
    let mut gold = Vec::with_capacity(5000);
    let mut pred = Vec::with_capacity(5000);
    let mut entities = 0;
    for i in 0..5000 {
        let n = rng.gen_range(2..=6);
        let set = EntitySet::new(
            (0..n)
                .map(|_| {
                    let mut e = common::entity(&mut rng, 0);
                    for key in rand::seq::index::sample(&mut rng, common::KEYS.len(), 3) {
                        e.insert_property(common::KEYS[key], common::value(&mut rng)).unwrap();
                    }
                    e
                })
                .collect(),
        );
        entities += set.len();
        pred.push(Sample::new(format!("s{i}"), None, common::noisy_copy(&mut rng, &set)));
        gold.push(Sample::new(format!("s{i}"), None, set));
    }
    let metric = [Metric::Aesop(Variant::default())];
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| e.to_string())?;
    let start = Instant::now();
    let report = pool
        .install(|| evaluate_corpus(&gold, &pred, &MetricConfig::default(), &metric))
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!(report.counts.evaluated == 5000, "evaluated {}", report.counts.evaluated);
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!(
        "5000 pairs, {:.2} gold entities per sample, {elapsed:.2?} on one thread",
        entities as f64 / 5000.0
    ))
}

fn main() -> ExitCode {
    let criteria: [Check; 10] = [
        ("assignment optimality", assignment_optimality),
        ("identity and bounds", identity_and_bounds),
        ("order invariance", order_invariance),
        ("triplet metric equivalence", triplet_equivalence),
        ("normalization dominance", normalization_dominance),
        ("listing fixtures", listing_fixtures),
        ("perturbation", perturbation),
        ("builtin schema", builtin_schema),
        ("correlation sanity", correlation_sanity),
        ("throughput", throughput),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
