//! Scoring toolkit for entity-centric information extraction.
//!
//! Predicted and gold entity sets are compared with an overlap score that
//! first finds the best one-to-one entity alignment and then averages
//! per-property token similarity over matched pairs. The crate also
//! converts triplet datasets into entity sets, builds perturbed corpora for
//! grounding checks and produces corpus reports.

pub mod adapters;
pub mod assignment;
pub mod corpus;
pub mod correlation;
pub mod entity;
pub mod error;
pub mod metric;
pub mod perturb;
pub mod report;
pub mod text;

pub use adapters::{
    builtin_wikidata_schema, convert_triplets, read_triplet_file, TripletFormat, TripletRecord, TypePolicy,
};
pub use assignment::{
    brute_force_assignment, build_similarity_matrix, solve_assignment, solve_assignment_with_tiebreak, AssignmentMode,
    AssignmentResult, AssignmentWeights, SimilarityMatrix,
};
pub use corpus::{read_corpus, Sample};
pub use entity::{parse_entity_set, serialize_entity_set, validate, EntityRecord, EntitySet, Schema};
pub use error::{Error, Result};
pub use metric::{
    aesop_score, all_variants, pairwise_entity_similarity, triplet_metrics, triplet_metrics_via_aesop, MetricConfig,
    Normalization, SampleScore, Variant,
};
pub use perturb::{build_catalog, perturb_corpus, PerturbationCatalog, PerturbationConfig};
pub use report::{compare_side_by_side, correlate_variants, evaluate_corpus, Metric, MetricReport};
pub use text::{jaccard, prop_similarity, tokenize, TokenizerConfig};
