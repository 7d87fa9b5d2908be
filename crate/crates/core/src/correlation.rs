//! Pearson and Spearman coefficients.

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

/// A correlation coefficient, or `Undefined` when either input has zero
/// variance. Serializes as a number or the string `"undefined"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coefficient {
    Value(f64),
    Undefined,
}

impl Coefficient {
    pub fn value(self) -> Option<f64> {
        match self {
            Self::Value(v) => Some(v),
            Self::Undefined => None,
        }
    }
}

impl Serialize for Coefficient {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Value(v) => serializer.serialize_f64(*v),
            Self::Undefined => serializer.serialize_str("undefined"),
        }
    }
}

impl<'de> Deserialize<'de> for Coefficient {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(v) => Ok(Self::Value(v)),
            Raw::Text(s) if s == "undefined" => Ok(Self::Undefined),
            Raw::Text(s) => Err(de::Error::custom(format!("unexpected coefficient `{s}`"))),
        }
    }
}

/// Pearson product-moment correlation of two equal-length samples.
pub fn pearson(x: &[f64], y: &[f64]) -> Coefficient {
    assert_eq!(x.len(), y.len(), "samples must have equal length");
    let n = x.len() as f64;
    let constant = |v: &[f64]| v.iter().all(|a| *a == v[0]);
    if x.len() < 2 || constant(x) || constant(y) {
        return Coefficient::Undefined;
    }
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mean_x, b - mean_y);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Coefficient::Undefined;
    }
    if x == y {
        return Coefficient::Value(1.0);
    }
    Coefficient::Value((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman rank correlation: Pearson over ranks, ties getting their
/// average rank.
pub fn spearman(x: &[f64], y: &[f64]) -> Coefficient {
    assert_eq!(x.len(), y.len(), "samples must have equal length");
    pearson(&ranks(x), &ranks(y))
}

/// 1-based ranks with ties averaged.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end share the mean of ranks start+1..=end
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            out[i] = rank;
        }
        start = end;
    }
    out
}
