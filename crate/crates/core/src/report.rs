//! Corpus evaluation, variant correlation and side-by-side comparison.
//!
//! Gold and prediction corpora are joined on sample id. A gold sample with
//! no prediction is scored against the empty set; prediction-only samples
//! are skipped with a warning. All stored values are fractions in `[0, 1]`;
//! percentages are only added for display.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adapters::entity_set_to_triplets;
use crate::assignment::AssignmentMode;
use crate::corpus::Sample;
use crate::correlation::{pearson, spearman, Coefficient};
use crate::entity::EntitySet;
use crate::error::{Error, Result};
use crate::metric::{f1, triplet_metrics, MetricConfig, Normalization, PairScorer, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Aesop(Variant),
    /// Harmonic mean of the precision- and recall-normalized scores of one
    /// assignment mode. A convenience, not one of the nine variants.
    AesopF1(AssignmentMode),
    TripletPrecision,
    TripletRecall,
    TripletF1,
}

impl Metric {
    /// The nine variants followed by the three triplet metrics.
    pub fn defaults() -> Vec<Metric> {
        Variant::all()
            .map(Metric::Aesop)
            .chain([Metric::TripletPrecision, Metric::TripletRecall, Metric::TripletF1])
            .collect()
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Aesop(v) => v.fmt(f),
            Self::AesopF1(mode) => write!(f, "aesop-{mode}-f1"),
            Self::TripletPrecision => f.write_str("triplet-precision"),
            Self::TripletRecall => f.write_str("triplet-recall"),
            Self::TripletF1 => f.write_str("triplet-f1"),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "triplet-precision" => return Ok(Self::TripletPrecision),
            "triplet-recall" => return Ok(Self::TripletRecall),
            "triplet-f1" => return Ok(Self::TripletF1),
            _ => {}
        }
        if let Some(mode) = s.strip_prefix("aesop-").and_then(|r| r.strip_suffix("-f1")) {
            return mode
                .parse()
                .map(Self::AesopF1)
                .map_err(|_| Error::UnknownMetric(s.to_string()));
        }
        s.parse().map(Self::Aesop)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMetrics {
    pub id: String,
    pub values: IndexMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub evaluated: usize,
    /// Gold samples without a prediction (scored against the empty set).
    pub missing_predictions: usize,
    /// Prediction samples without a gold counterpart.
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// The configured variant.
    pub primary_metric: String,
    pub metrics: Vec<String>,
    pub config: MetricConfig,
    pub counts: Counts,
    pub aggregate: IndexMap<String, f64>,
    pub aggregate_percent: IndexMap<String, f64>,
    pub per_sample: Vec<SampleMetrics>,
    pub warnings: Vec<String>,
}

impl MetricReport {
    /// Per-sample values of one metric in sample order.
    pub fn column(&self, metric: &str) -> Option<Vec<f64>> {
        self.per_sample.iter().map(|s| s.values.get(metric).copied()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    /// One row per sample: `id` followed by one column per metric.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .quote_style(csv::QuoteStyle::NonNumeric)
            .from_writer(out);
        w.write_record(std::iter::once("id").chain(self.metrics.iter().map(String::as_str)))?;
        for s in &self.per_sample {
            w.write_field(&s.id)?;
            for m in &self.metrics {
                w.write_field(format_value(s.values[m]))?;
            }
            w.write_record(None::<&[u8]>)?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

fn format_value(v: f64) -> String {
    format!("{v:.6}")
}

fn index_by_id(samples: &[Sample]) -> Result<HashMap<&str, &Sample>> {
    let mut out = HashMap::with_capacity(samples.len());
    for s in samples {
        if out.insert(s.id.as_str(), s).is_some() {
            return Err(Error::DuplicateSampleId(s.id.clone()));
        }
    }
    Ok(out)
}

/// Scores every requested metric on one (prediction, gold) pair.
pub fn score_sample(pred: &EntitySet, gold: &EntitySet, config: &MetricConfig, metrics: &[Metric]) -> Vec<f64> {
    let scorer = PairScorer::new(pred, gold, config);
    let mut matched = HashMap::new();
    let mut aesop = |mode: AssignmentMode, norm: Normalization| {
        let pairs = matched.entry(mode).or_insert_with(|| scorer.matched(mode));
        scorer.score(pairs, norm).value
    };
    let mut triplets = None;
    let mut triplet_scores = || {
        *triplets.get_or_insert_with(|| {
            triplet_metrics(
                &entity_set_to_triplets(pred),
                &entity_set_to_triplets(gold),
                &config.tokenizer,
            )
        })
    };
    metrics
        .iter()
        .map(|m| match *m {
            Metric::Aesop(v) => aesop(v.mode, v.normalization),
            Metric::AesopF1(mode) => f1(
                aesop(mode, Normalization::Precision),
                aesop(mode, Normalization::Recall),
            ),
            Metric::TripletPrecision => triplet_scores().precision,
            Metric::TripletRecall => triplet_scores().recall,
            Metric::TripletF1 => triplet_scores().f1,
        })
        .collect()
}

/// Evaluates a prediction corpus against a gold corpus. An empty `metrics`
/// list means [`Metric::defaults`].
pub fn evaluate_corpus(
    gold: &[Sample],
    pred: &[Sample],
    config: &MetricConfig,
    metrics: &[Metric],
) -> Result<MetricReport> {
    let metrics = if metrics.is_empty() {
        Metric::defaults()
    } else {
        metrics.to_vec()
    };
    let gold_ids = index_by_id(gold)?;
    let pred_ids = index_by_id(pred)?;
    if !gold.iter().any(|g| pred_ids.contains_key(g.id.as_str())) {
        return Err(Error::NoJoinableSamples);
    }

    let mut warnings = Vec::new();
    let mut counts = Counts::default();
    let empty = EntitySet::empty();
    let jobs: Vec<(&Sample, &EntitySet)> = gold
        .iter()
        .map(|g| match pred_ids.get(g.id.as_str()) {
            Some(p) => (g, &p.entities),
            None => {
                counts.missing_predictions += 1;
                warnings.push(format!("no prediction for sample `{}`; scored as empty", g.id));
                (g, &empty)
            }
        })
        .collect();
    for p in pred {
        if !gold_ids.contains_key(p.id.as_str()) {
            counts.skipped += 1;
            warnings.push(format!("prediction `{}` has no gold sample; skipped", p.id));
        }
    }
    counts.evaluated = jobs.len();

    let names: Vec<String> = metrics.iter().map(ToString::to_string).collect();
    let rows: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|(g, p)| score_sample(p, &g.entities, config, &metrics))
        .collect();

    let mut aggregate = IndexMap::new();
    for (k, name) in names.iter().enumerate() {
        let sum: f64 = rows.iter().map(|r| r[k]).sum();
        aggregate.insert(name.clone(), sum / rows.len() as f64);
    }
    let aggregate_percent = aggregate.iter().map(|(k, v)| (k.clone(), v * 100.0)).collect();
    let per_sample = jobs
        .iter()
        .zip(rows)
        .map(|((g, _), row)| SampleMetrics {
            id: g.id.clone(),
            values: names.iter().cloned().zip(row).collect(),
        })
        .collect();

    Ok(MetricReport {
        primary_metric: config.variant().to_string(),
        metrics: names,
        config: *config,
        counts,
        aggregate,
        aggregate_percent,
        per_sample,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub a: String,
    pub b: String,
    pub pearson: Coefficient,
    pub spearman: Coefficient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub id: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub metrics: Vec<String>,
    pub samples: usize,
    /// Every ordered pair of metrics, row-major over `metrics`.
    pub matrix: Vec<CorrelationEntry>,
    #[serde(skip)]
    pub scatter: Vec<ScatterRow>,
}

impl CorrelationReport {
    pub fn get(&self, a: &str, b: &str) -> Option<&CorrelationEntry> {
        self.matrix.iter().find(|e| e.a == a && e.b == b)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    /// Scatter data: `id` plus one column per metric.
    pub fn write_scatter_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .quote_style(csv::QuoteStyle::NonNumeric)
            .from_writer(out);
        w.write_record(std::iter::once("id").chain(self.metrics.iter().map(String::as_str)))?;
        for row in &self.scatter {
            w.write_field(&row.id)?;
            for v in &row.values {
                w.write_field(format_value(*v))?;
            }
            w.write_record(None::<&[u8]>)?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

/// Pearson and Spearman coefficients between per-sample values of every
/// pair of `metrics` (all report metrics when empty).
pub fn correlate_variants(report: &MetricReport, metrics: &[String]) -> Result<CorrelationReport> {
    let metrics = if metrics.is_empty() {
        report.metrics.clone()
    } else {
        metrics.to_vec()
    };
    if report.per_sample.len() < 2 {
        return Err(Error::TooFewSamples {
            need: 2,
            got: report.per_sample.len(),
        });
    }
    let columns = metrics
        .iter()
        .map(|m| report.column(m).ok_or_else(|| Error::UnknownMetric(m.clone())))
        .collect::<Result<Vec<_>>>()?;

    let k = metrics.len();
    let mut cells = vec![(Coefficient::Undefined, Coefficient::Undefined); k * k];
    for i in 0..k {
        for j in i..k {
            let c = (pearson(&columns[i], &columns[j]), spearman(&columns[i], &columns[j]));
            cells[i * k + j] = c;
            cells[j * k + i] = c;
        }
    }
    let matrix = cells
        .into_iter()
        .enumerate()
        .map(|(idx, (p, s))| CorrelationEntry {
            a: metrics[idx / k].clone(),
            b: metrics[idx % k].clone(),
            pearson: p,
            spearman: s,
        })
        .collect();
    let scatter = report
        .per_sample
        .iter()
        .enumerate()
        .map(|(row, s)| ScatterRow {
            id: s.id.clone(),
            values: columns.iter().map(|c| c[row]).collect(),
        })
        .collect();
    Ok(CorrelationReport {
        metrics,
        samples: report.per_sample.len(),
        matrix,
        scatter,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preference {
    A,
    B,
    Tie,
}

/// Scores closer than this are ties.
pub const TIE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleComparison {
    pub id: String,
    pub preferences: IndexMap<String, Preference>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceSummary {
    pub a_preferred: usize,
    pub b_preferred: usize,
    pub ties: usize,
    /// Share of non-tied samples where A scores higher, in percent; 0 when
    /// every sample ties.
    pub a_preferred_percent: f64,
    pub tie_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub metrics: Vec<String>,
    pub summary: IndexMap<String, PreferenceSummary>,
    pub per_sample: Vec<SampleComparison>,
    pub warnings: Vec<String>,
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

/// Per sample and metric, which of two prediction corpora scores higher.
pub fn compare_side_by_side(
    gold: &[Sample],
    pred_a: &[Sample],
    pred_b: &[Sample],
    config: &MetricConfig,
    metrics: &[Metric],
) -> Result<ComparisonReport> {
    let a = evaluate_corpus(gold, pred_a, config, metrics)?;
    let b = evaluate_corpus(gold, pred_b, config, metrics)?;
    let mut summary: IndexMap<String, PreferenceSummary> = a
        .metrics
        .iter()
        .map(|m| {
            (
                m.clone(),
                PreferenceSummary {
                    a_preferred: 0,
                    b_preferred: 0,
                    ties: 0,
                    a_preferred_percent: 0.0,
                    tie_percent: 0.0,
                },
            )
        })
        .collect();
    let per_sample = a
        .per_sample
        .iter()
        .zip(&b.per_sample)
        .map(|(sa, sb)| {
            let preferences = a
                .metrics
                .iter()
                .map(|m| {
                    let (va, vb) = (sa.values[m], sb.values[m]);
                    let p = if (va - vb).abs() <= TIE_EPSILON {
                        Preference::Tie
                    } else if va > vb {
                        Preference::A
                    } else {
                        Preference::B
                    };
                    let s = summary.get_mut(m).expect("summary has every metric");
                    match p {
                        Preference::A => s.a_preferred += 1,
                        Preference::B => s.b_preferred += 1,
                        Preference::Tie => s.ties += 1,
                    }
                    (m.clone(), p)
                })
                .collect();
            SampleComparison {
                id: sa.id.clone(),
                preferences,
            }
        })
        .collect();
    for s in summary.values_mut() {
        let decided = s.a_preferred + s.b_preferred;
        let total = decided + s.ties;
        s.a_preferred_percent = if decided == 0 {
            0.0
        } else {
            100.0 * s.a_preferred as f64 / decided as f64
        };
        s.tie_percent = if total == 0 {
            0.0
        } else {
            100.0 * s.ties as f64 / total as f64
        };
    }
    let mut warnings = a.warnings;
    let seen: HashSet<&String> = warnings.iter().collect();
    let extra: Vec<String> = b.warnings.into_iter().filter(|w| !seen.contains(w)).collect();
    warnings.extend(extra);
    Ok(ComparisonReport {
        metrics: a.metrics,
        summary,
        per_sample,
        warnings,
    })
}
