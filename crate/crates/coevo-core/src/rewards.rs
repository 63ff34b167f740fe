//! Proposer and critic reward signals with full per-term breakdowns.
//!
//! Proposer: softmax-aggregated Gaussian accuracy plus a box-hit bonus, and
//! a covariance-determinant coverage term. Critic: top-1 selection quality
//! and NDCG ranking quality against the Gaussian relevance scores.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{gaussian_score, hit, CandidateSet, GroundingTask, ScoringConfig};

/// The critic's full permutation over candidate indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedList {
    order: Vec<usize>,
}

impl RankedList {
    /// Validates that `order` is a permutation of `0..order.len()`.
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let k = order.len();
        let mut seen = vec![false; k];
        for &idx in &order {
            if idx >= k || seen[idx] {
                return Err(Error::Shape(format!(
                    "ranking {order:?} is not a permutation of 0..{k}"
                )));
            }
            seen[idx] = true;
        }
        Ok(Self { order })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// The identity ranking (0, 1, ..., k-1).
    pub fn identity(k: usize) -> Self {
        Self { order: (0..k).collect() }
    }
}

/// Coverage reward knobs: the stabilizer inside the square root and the
/// covariance estimator convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageConfig {
    pub epsilon: f64,
    pub normalization: CovNormalization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovNormalization {
    /// Divide by K. Keeps the K=2 case defined; the default.
    Population,
    /// Divide by K-1.
    Sample,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-8,
            normalization: CovNormalization::Population,
        }
    }
}

impl CoverageConfig {
    pub fn validated(self) -> Result<Self> {
        if self.epsilon <= 0.0 || !self.epsilon.is_finite() {
            return Err(Error::Argument(format!(
                "coverage epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(self)
    }
}

/// Every reward term for one episode. Critic terms are present only when a
/// ranking was supplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    /// Gaussian score s_i per candidate, in candidate order.
    pub scores: Vec<f64>,
    /// Softmax of the raw scores (temperature 1); sums to 1.
    pub softmax_weights: Vec<f64>,
    /// Σ softmax(s)_i · s_i
    pub weighted_score_term: f64,
    /// (1/K) Σ hit_constant · [p_i in target box]
    pub hit_term: f64,
    pub r_acc: f64,
    pub r_cov: f64,
    pub r_top1: Option<f64>,
    pub r_ndcg: Option<f64>,
    /// Set when the candidate set cannot span an area (K = 1).
    pub degenerate_spread: bool,
}

fn softmax(values: &[f64]) -> Vec<f64> {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.iter().map(|e| e / z).collect()
}

/// Accuracy reward: softmax-weighted score aggregation plus the mean hit
/// bonus. Returns the breakdown with the accuracy terms populated.
pub fn proposer_accuracy_reward(
    cands: &CandidateSet,
    task: &GroundingTask,
    cfg: &ScoringConfig,
) -> RewardBreakdown {
    let scores: Vec<f64> = cands
        .points()
        .iter()
        .map(|&p| gaussian_score(p, task, cfg))
        .collect();
    let weights = softmax(&scores);
    let weighted_score_term: f64 = weights.iter().zip(&scores).map(|(w, s)| w * s).sum();
    let hits: f64 = cands
        .points()
        .iter()
        .filter(|&&p| hit(p, &task.target, cfg))
        .count() as f64;
    let hit_term = cfg.hit_constant * hits / cands.k() as f64;
    RewardBreakdown {
        r_acc: weighted_score_term + hit_term,
        scores,
        softmax_weights: weights,
        weighted_score_term,
        hit_term,
        r_cov: 0.0,
        r_top1: None,
        r_ndcg: None,
        degenerate_spread: false,
    }
}

/// Coverage reward: `tanh(sqrt(|det Σ| + ε))` of the candidate covariance.
/// A single candidate has no spread and yields the degenerate `tanh(sqrt(ε))`.
pub fn proposer_coverage_reward(cands: &CandidateSet, cfg: &CoverageConfig) -> f64 {
    let k = cands.k();
    let det = if k < 2 {
        0.0
    } else {
        let n = k as f64;
        let (mut mx, mut my) = (0.0, 0.0);
        for p in cands.points() {
            mx += p.x;
            my += p.y;
        }
        mx /= n;
        my /= n;
        let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
        for p in cands.points() {
            let (dx, dy) = (p.x - mx, p.y - my);
            sxx += dx * dx;
            syy += dy * dy;
            sxy += dx * dy;
        }
        let denom = match cfg.normalization {
            CovNormalization::Population => n,
            CovNormalization::Sample => n - 1.0,
        };
        (sxx / denom) * (syy / denom) - (sxy / denom) * (sxy / denom)
    };
    (det.abs() + cfg.epsilon).sqrt().tanh()
}

/// Top-1 selection reward: the Gaussian score of the candidate the critic
/// ranked first.
pub fn critic_top1_reward(ranking: &RankedList, scores: &[f64]) -> Result<f64> {
    if ranking.len() != scores.len() {
        return Err(Error::Shape(format!(
            "ranking length {} != score count {}",
            ranking.len(),
            scores.len()
        )));
    }
    Ok(scores[ranking.order()[0]])
}

/// NDCG ranking reward: DCG of the predicted order over the ideal DCG.
/// Equals 1 for every score-descending order, including all tie orders.
pub fn critic_ndcg_reward(ranking: &RankedList, scores: &[f64]) -> Result<f64> {
    if ranking.len() != scores.len() {
        return Err(Error::Shape(format!(
            "ranking length {} != score count {}",
            ranking.len(),
            scores.len()
        )));
    }
    let dcg: f64 = ranking
        .order()
        .iter()
        .enumerate()
        .map(|(rank, &idx)| scores[idx] / ((rank + 2) as f64).log2())
        .sum();
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("scores must not be NaN"));
    let idcg: f64 = sorted
        .iter()
        .enumerate()
        .map(|(rank, s)| s / ((rank + 2) as f64).log2())
        .sum();
    Ok(dcg / idcg)
}

/// All four reward terms for one episode. `ranking` may be absent, in which
/// case the critic terms stay unpopulated.
pub fn compute_breakdown(
    cands: &CandidateSet,
    task: &GroundingTask,
    ranking: Option<&RankedList>,
    scoring: &ScoringConfig,
    coverage: &CoverageConfig,
) -> Result<RewardBreakdown> {
    let mut breakdown = proposer_accuracy_reward(cands, task, scoring);
    breakdown.r_cov = proposer_coverage_reward(cands, coverage);
    breakdown.degenerate_spread = cands.k() < 2;
    if let Some(ranking) = ranking {
        breakdown.r_top1 = Some(critic_top1_reward(ranking, &breakdown.scores)?);
        breakdown.r_ndcg = Some(critic_ndcg_reward(ranking, &breakdown.scores)?);
    }
    Ok(breakdown)
}
