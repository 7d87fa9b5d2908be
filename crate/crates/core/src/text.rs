//! Tokenization and the Jaccard kernel shared by both scoring phases.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    /// Replace punctuation and symbol characters with spaces before splitting.
    pub strip_punctuation: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            strip_punctuation: true,
        }
    }
}

/// Splits on whitespace runs after optional case folding and punctuation
/// stripping. Anything that is neither alphanumeric nor whitespace counts
/// as punctuation.
pub fn tokenize(value: &str, config: &TokenizerConfig) -> Vec<String> {
    let folded;
    let value = if config.lowercase {
        folded = value.to_lowercase();
        folded.as_str()
    } else {
        value
    };
    if config.strip_punctuation {
        value
            .split(|c: char| c.is_whitespace() || !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect()
    } else {
        value.split_whitespace().map(str::to_string).collect()
    }
}

/// Set Jaccard index. Zero when either side is empty.
pub fn jaccard<S: AsRef<str>>(a: &[S], b: &[S]) -> f64 {
    TokenSet::from_tokens(a).jaccard(&TokenSet::from_tokens(b))
}

/// Jaccard similarity of two optional values; zero if either is absent or
/// has no tokens.
pub fn prop_similarity(v1: Option<&str>, v2: Option<&str>, config: &TokenizerConfig) -> f64 {
    match (v1, v2) {
        (Some(a), Some(b)) => TokenSet::new(a, config).jaccard(&TokenSet::new(b, config)),
        _ => 0.0,
    }
}

/// Sorted, deduplicated tokens of one value.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenSet(Vec<String>);

impl TokenSet {
    pub fn new(value: &str, config: &TokenizerConfig) -> Self {
        Self::from_vec(tokenize(value, config))
    }

    pub fn from_tokens<S: AsRef<str>>(tokens: &[S]) -> Self {
        Self::from_vec(tokens.iter().map(|t| t.as_ref().to_string()).collect())
    }

    fn from_vec(mut tokens: Vec<String>) -> Self {
        tokens.sort_unstable();
        tokens.dedup();
        Self(tokens)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn jaccard(&self, other: &TokenSet) -> f64 {
        if self.0.is_empty() || other.0.is_empty() {
            return 0.0;
        }
        let (mut i, mut j, mut shared) = (0, 0, 0usize);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    shared += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        let union = self.0.len() + other.0.len() - shared;
        shared as f64 / union as f64
    }
}
