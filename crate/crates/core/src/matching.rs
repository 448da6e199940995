//! Matching metrics where 1 is a perfect match: sentence and corpus BLEU
//! (clipped n-gram precisions, brevity penalty, optional add-one smoothing
//! for zero higher-order counts), BERTScore (greedy max-cosine matching of
//! token embeddings, no idf weighting, no baseline rescaling), and a
//! bag-of-tokens overlap F1.

pub mod embedding;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokenizer::TokenSeq;
use embedding::{EmbedError, EmbeddingProvider};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatchError {
    #[error("reference must be non-empty")]
    EmptyReference,
    #[error("corpus must contain at least one pair")]
    EmptyCorpus,
    #[error("both candidate and reference must be non-empty")]
    EmptySide,
    #[error("both sequences are empty")]
    BothEmpty,
    #[error("invalid BLEU config: {0}")]
    InvalidConfig(String),
    #[error("embedding provider: {0}")]
    Provider(#[from] EmbedError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    /// No smoothing: any zero precision collapses the score to 0.
    None,
    /// For n >= 2, a zero clipped count scores (0 + 1) / (total + 1), so
    /// short classification outputs do not zero out BLEU-4.
    AddOneOnZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuConfig {
    max_n: usize,
    weights: Vec<f64>,
    smoothing: Smoothing,
}

impl BleuConfig {
    pub fn new(max_n: usize, weights: Vec<f64>, smoothing: Smoothing) -> Result<Self, MatchError> {
        if max_n < 1 {
            return Err(MatchError::InvalidConfig("max_n must be >= 1".into()));
        }
        if weights.len() != max_n {
            return Err(MatchError::InvalidConfig(format!(
                "expected {max_n} weights, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| *w < 0.0) {
            return Err(MatchError::InvalidConfig("weights must be non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(MatchError::InvalidConfig(format!(
                "weights must sum to 1, got {total}"
            )));
        }
        Ok(Self {
            max_n,
            weights,
            smoothing,
        })
    }

    /// Unigram precision only.
    pub fn bleu1() -> Self {
        Self {
            max_n: 1,
            weights: vec![1.0],
            smoothing: Smoothing::AddOneOnZero,
        }
    }

    /// Orders 1..=4 with uniform quarter weights.
    pub fn bleu4() -> Self {
        Self {
            max_n: 4,
            weights: vec![0.25; 4],
            smoothing: Smoothing::AddOneOnZero,
        }
    }

    pub fn with_smoothing(mut self, smoothing: Smoothing) -> Self {
        self.smoothing = smoothing;
        self
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn smoothing(&self) -> Smoothing {
        self.smoothing
    }
}

/// Running n-gram match/total counts plus lengths, summable across pairs.
#[derive(Debug, Clone)]
struct BleuTotals {
    matches: Vec<u64>,
    totals: Vec<u64>,
    candidate_len: u64,
    reference_len: u64,
}

impl BleuTotals {
    fn new(max_n: usize) -> Self {
        Self {
            matches: vec![0; max_n],
            totals: vec![0; max_n],
            candidate_len: 0,
            reference_len: 0,
        }
    }

    fn add_pair(&mut self, candidate: &TokenSeq, reference: &TokenSeq) {
        self.candidate_len += candidate.len() as u64;
        self.reference_len += reference.len() as u64;
        for n in 1..=self.matches.len() {
            let (matched, total) = clipped_ngram_matches(candidate.tokens(), reference.tokens(), n);
            self.matches[n - 1] += matched;
            self.totals[n - 1] += total;
        }
    }

    fn score(&self, config: &BleuConfig) -> f64 {
        if self.candidate_len == 0 {
            return 0.0;
        }
        let mut precisions = Vec::with_capacity(config.max_n);
        for n in 1..=config.max_n {
            let m = self.matches[n - 1];
            let t = self.totals[n - 1];
            let p = match config.smoothing {
                Smoothing::AddOneOnZero if n >= 2 && m == 0 => {
                    (m + 1) as f64 / (t + 1) as f64
                }
                _ => {
                    if t == 0 {
                        0.0
                    } else {
                        m as f64 / t as f64
                    }
                }
            };
            precisions.push(p);
        }
        let c = self.candidate_len as f64;
        let r = self.reference_len as f64;
        let bp = if self.candidate_len >= self.reference_len {
            1.0
        } else {
            (1.0 - r / c).exp()
        };
        // Single-order BLEU avoids the exp/ln round trip entirely.
        if config.max_n == 1 {
            return bp * precisions[0];
        }
        if precisions.iter().any(|p| *p == 0.0) {
            return 0.0;
        }
        let log_sum: f64 = precisions
            .iter()
            .zip(&config.weights)
            .map(|(p, w)| w * p.ln())
            .sum();
        bp * log_sum.exp()
    }
}

/// Clipped modified n-gram counts: sum over distinct candidate n-grams of
/// `min(count_candidate, count_reference)`, plus the total candidate n-gram
/// count.
fn clipped_ngram_matches(candidate: &[String], reference: &[String], n: usize) -> (u64, u64) {
    if candidate.len() < n {
        return (0, 0);
    }
    let mut cand_counts: HashMap<&[String], u64> = HashMap::new();
    for gram in candidate.windows(n) {
        *cand_counts.entry(gram).or_insert(0) += 1;
    }
    let mut ref_counts: HashMap<&[String], u64> = HashMap::new();
    for gram in reference.windows(n) {
        *ref_counts.entry(gram).or_insert(0) += 1;
    }
    let matched = cand_counts
        .iter()
        .map(|(gram, count)| (*count).min(ref_counts.get(gram).copied().unwrap_or(0)))
        .sum();
    let total = (candidate.len() - n + 1) as u64;
    (matched, total)
}

/// BLEU for one candidate/reference pair. An empty candidate scores 0; an
/// empty reference is an error.
pub fn sentence_bleu(
    candidate: &TokenSeq,
    reference: &TokenSeq,
    config: &BleuConfig,
) -> Result<f64, MatchError> {
    if reference.is_empty() {
        return Err(MatchError::EmptyReference);
    }
    if candidate.is_empty() {
        return Ok(0.0);
    }
    let mut totals = BleuTotals::new(config.max_n);
    totals.add_pair(candidate, reference);
    Ok(totals.score(config))
}

/// Corpus-level BLEU: counts and lengths are summed over all pairs before
/// precisions and the brevity penalty are computed.
pub fn corpus_bleu(
    pairs: &[(&TokenSeq, &TokenSeq)],
    config: &BleuConfig,
) -> Result<f64, MatchError> {
    if pairs.is_empty() {
        return Err(MatchError::EmptyCorpus);
    }
    let mut totals = BleuTotals::new(config.max_n);
    for (candidate, reference) in pairs {
        if reference.is_empty() {
            return Err(MatchError::EmptyReference);
        }
        totals.add_pair(candidate, reference);
    }
    Ok(totals.score(config))
}

/// Precision / recall / F1 from greedy max-cosine matching of token
/// embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BertScoreResult {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn cosine_sim(a: &[f64], b: &[f64]) -> Result<f64, EmbedError> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(EmbedError::BadResponse("provider returned a zero vector".into()));
    }
    Ok(dot / (na * nb))
}

/// Each candidate token is matched to its max-similarity reference token
/// (precision) and vice versa (recall); F1 is their harmonic mean, 0 when
/// either side of the mean is not positive.
pub fn bert_score(
    candidate: &TokenSeq,
    reference: &TokenSeq,
    provider: &dyn EmbeddingProvider,
) -> Result<BertScoreResult, MatchError> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(MatchError::EmptySide);
    }
    let cand_emb = provider.embed(candidate)?;
    let ref_emb = provider.embed(reference)?;
    if cand_emb.len() != candidate.len() || ref_emb.len() != reference.len() {
        return Err(MatchError::Provider(EmbedError::BadResponse(format!(
            "expected {}+{} vectors, got {}+{}",
            candidate.len(),
            reference.len(),
            cand_emb.len(),
            ref_emb.len()
        ))));
    }
    let mut sims = vec![vec![0.0; ref_emb.len()]; cand_emb.len()];
    for (i, c) in cand_emb.iter().enumerate() {
        for (j, r) in ref_emb.iter().enumerate() {
            sims[i][j] = cosine_sim(c, r)?;
        }
    }
    let max_of = |row: &[f64]| row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let precision = sims.iter().map(|row| max_of(row)).sum::<f64>() / cand_emb.len() as f64;
    let recall = (0..ref_emb.len())
        .map(|j| max_of(&sims.iter().map(|row| row[j]).collect::<Vec<_>>()))
        .sum::<f64>()
        / ref_emb.len() as f64;
    let f1 = if precision > 0.0 && recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(BertScoreResult {
        precision,
        recall,
        f1,
    })
}

/// Bag-of-tokens overlap F1: `o = sum_t min(tf_cand, tf_ref)`,
/// `P = o/|cand|`, `R = o/|ref|`. Equals the multiset Dice similarity
/// `2o / (|cand| + |ref|)`.
pub fn overlap_f1(candidate: &TokenSeq, reference: &TokenSeq) -> Result<f64, MatchError> {
    if candidate.is_empty() && reference.is_empty() {
        return Err(MatchError::BothEmpty);
    }
    let mut counts: HashMap<&String, (u64, u64)> = HashMap::new();
    for t in candidate.tokens() {
        counts.entry(t).or_insert((0, 0)).0 += 1;
    }
    for t in reference.tokens() {
        counts.entry(t).or_insert((0, 0)).1 += 1;
    }
    let overlap: u64 = counts.values().map(|(c, r)| (*c).min(*r)).sum();
    if overlap == 0 {
        return Ok(0.0);
    }
    let precision = overlap as f64 / candidate.len() as f64;
    let recall = overlap as f64 / reference.len() as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}
