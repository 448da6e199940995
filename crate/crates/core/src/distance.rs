//! Normalized distance metrics between two token sequences, each mapped to
//! `[0, 1]` where 0 is a perfect match and 1 a complete mismatch:
//! generalized Levenshtein (weighted edit distance, normalized), Jaccard,
//! Sørensen-Dice, and Cosine over term-frequency vectors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokenizer::{l1_normalize, term_frequencies, FrequencyVector, TokenSeq};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistanceError {
    #[error("both sequences are empty")]
    BothEmpty,
    #[error("cannot build a frequency vector from an empty sequence")]
    ZeroVector,
    #[error("invalid edit cost scheme: {0}")]
    InvalidCosts(String),
}

/// Per-operation edit weights. The maximum elementary weight `alpha` is
/// derived at construction and used as the normalization scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditCostScheme {
    insertion: f64,
    deletion: f64,
    substitution: f64,
    alpha: f64,
}

impl EditCostScheme {
    /// All costs must be non-negative and at least one positive.
    pub fn new(insertion: f64, deletion: f64, substitution: f64) -> Result<Self, DistanceError> {
        for (name, c) in [
            ("insertion", insertion),
            ("deletion", deletion),
            ("substitution", substitution),
        ] {
            if !(c >= 0.0) {
                return Err(DistanceError::InvalidCosts(format!(
                    "{name} cost must be non-negative, got {c}"
                )));
            }
        }
        let alpha = insertion.max(deletion).max(substitution);
        if alpha <= 0.0 {
            return Err(DistanceError::InvalidCosts(
                "at least one cost must be positive".to_string(),
            ));
        }
        Ok(Self {
            insertion,
            deletion,
            substitution,
            alpha,
        })
    }

    /// Unit costs (1, 1, 1), alpha = 1.
    pub fn unit() -> Self {
        Self {
            insertion: 1.0,
            deletion: 1.0,
            substitution: 1.0,
            alpha: 1.0,
        }
    }

    pub fn insertion_cost(&self) -> f64 {
        self.insertion
    }

    pub fn deletion_cost(&self) -> f64 {
        self.deletion
    }

    pub fn substitution_cost(&self) -> f64 {
        self.substitution
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl Default for EditCostScheme {
    fn default() -> Self {
        Self::unit()
    }
}

/// Minimum total edit weight transforming `x` into `y`, by dynamic
/// programming in `O(|x| * |y|)`. Matching tokens cost nothing.
pub fn gld(x: &TokenSeq, y: &TokenSeq, scheme: &EditCostScheme) -> f64 {
    let xs = x.tokens();
    let ys = y.tokens();
    let mut prev: Vec<f64> = (0..=ys.len())
        .map(|j| j as f64 * scheme.insertion)
        .collect();
    let mut cur = vec![0.0; ys.len() + 1];
    for (i, xt) in xs.iter().enumerate() {
        cur[0] = (i + 1) as f64 * scheme.deletion;
        for (j, yt) in ys.iter().enumerate() {
            let swap = prev[j] + if xt == yt { 0.0 } else { scheme.substitution };
            cur[j + 1] = (prev[j + 1] + scheme.deletion)
                .min(cur[j] + scheme.insertion)
                .min(swap);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[ys.len()]
}

/// `2 * GLD / (alpha * (|x| + |y|) + GLD)`, in `[0, 1]`, 0 iff `x == y`.
pub fn normalized_levenshtein(
    x: &TokenSeq,
    y: &TokenSeq,
    scheme: &EditCostScheme,
) -> Result<f64, DistanceError> {
    if x.is_empty() && y.is_empty() {
        return Err(DistanceError::BothEmpty);
    }
    let d = gld(x, y, scheme);
    Ok(2.0 * d / (scheme.alpha * (x.len() + y.len()) as f64 + d))
}

fn unique_tokens(seq: &TokenSeq) -> Vec<&String> {
    let mut seen: Vec<&String> = Vec::new();
    for t in seq.tokens() {
        if !seen.contains(&t) {
            seen.push(t);
        }
    }
    seen
}

fn set_overlap(x: &TokenSeq, y: &TokenSeq) -> (f64, f64, f64) {
    let xs = unique_tokens(x);
    let ys = unique_tokens(y);
    let inter = xs.iter().filter(|t| ys.contains(t)).count();
    (inter as f64, xs.len() as f64, ys.len() as f64)
}

/// `1 - |x ∩ y| / |x ∪ y|` over unique-token sets.
pub fn jaccard_distance(x: &TokenSeq, y: &TokenSeq) -> Result<f64, DistanceError> {
    if x.is_empty() && y.is_empty() {
        return Err(DistanceError::BothEmpty);
    }
    let (inter, nx, ny) = set_overlap(x, y);
    let union = nx + ny - inter;
    Ok(1.0 - inter / union)
}

/// `1 - 2 |x ∩ y| / (|x| + |y|)` over unique-token sets.
pub fn dice_distance(x: &TokenSeq, y: &TokenSeq) -> Result<f64, DistanceError> {
    if x.is_empty() && y.is_empty() {
        return Err(DistanceError::BothEmpty);
    }
    let (inter, nx, ny) = set_overlap(x, y);
    Ok(1.0 - (2.0 * inter) / (nx + ny))
}

fn dot(u: &FrequencyVector, v: &FrequencyVector) -> f64 {
    u.entries()
        .iter()
        .map(|(token, w)| w * v.get(token))
        .sum()
}

fn l2_norm(u: &FrequencyVector) -> f64 {
    u.entries().values().map(|w| w * w).sum::<f64>().sqrt()
}

/// `1 - cos(u, v)` over L1-normalized term-frequency vectors. Cosine is
/// scale-invariant, so the normalization does not change the value; it is
/// kept as the documented construction and exercised in tests.
pub fn cosine_distance(x: &TokenSeq, y: &TokenSeq) -> Result<f64, DistanceError> {
    let u = l1_normalize(&term_frequencies(x)).map_err(|_| DistanceError::ZeroVector)?;
    let v = l1_normalize(&term_frequencies(y)).map_err(|_| DistanceError::ZeroVector)?;
    let sim = (dot(&u, &v) / (l2_norm(&u) * l2_norm(&v))).clamp(0.0, 1.0);
    Ok(1.0 - sim)
}

/// The four distances for one pair, computed on the same tokenization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceResult {
    pub levenshtein: f64,
    pub jaccard: f64,
    pub dice: f64,
    pub cosine: f64,
}

/// Bundles all four metrics. Degenerate pairs are folded instead of
/// erroring: both sides empty means a perfect match (all zeros), exactly
/// one empty side a complete mismatch for cosine (1.0); the other metrics
/// are defined there already.
pub fn distance_vector(x: &TokenSeq, y: &TokenSeq, scheme: &EditCostScheme) -> DistanceResult {
    if x.is_empty() && y.is_empty() {
        return DistanceResult {
            levenshtein: 0.0,
            jaccard: 0.0,
            dice: 0.0,
            cosine: 0.0,
        };
    }
    DistanceResult {
        levenshtein: normalized_levenshtein(x, y, scheme).expect("not both empty"),
        jaccard: jaccard_distance(x, y).expect("not both empty"),
        dice: dice_distance(x, y).expect("not both empty"),
        cosine: cosine_distance(x, y).unwrap_or(1.0),
    }
}
