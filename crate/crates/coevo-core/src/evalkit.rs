//! Grounding metrics (Oracle@K, Top-1, gap, pass@k) and the data-filtering
//! pipeline: geometric static checks, outcome-based difficulty preselection,
//! and a pluggable semantic verifier.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{hit, GroundingTask, Point2, ScoringConfig};
use crate::rewards::RankedList;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub task_id: String,
    pub points: Vec<Point2>,
    pub ranking: Option<RankedList>,
}

impl PredictionRecord {
    pub fn new(task_id: impl Into<String>, points: Vec<Point2>, ranking: Option<RankedList>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySet);
        }
        if let Some(r) = &ranking {
            if r.len() != points.len() {
                return Err(Error::Shape(format!(
                    "ranking over {} items for {} points",
                    r.len(),
                    points.len()
                )));
            }
        }
        Ok(Self { task_id: task_id.into(), points, ranking })
    }
}

/// True iff any of the first min(k, available) points hits the target.
pub fn oracle_at_k(preds: &PredictionRecord, task: &GroundingTask, cfg: &ScoringConfig, k: usize) -> bool {
    preds
        .points
        .iter()
        .take(k)
        .any(|&p| hit(p, &task.target, cfg))
}

/// True iff the top-ranked point hits the target.
pub fn top1_accuracy(preds: &PredictionRecord, task: &GroundingTask, cfg: &ScoringConfig) -> Result<bool> {
    let ranking = preds.ranking.as_ref().ok_or(Error::RankingRequired)?;
    Ok(hit(preds.points[ranking.order()[0]], &task.target, cfg))
}

/// Top-1 rate minus the Oracle@K ceiling; nonpositive whenever both come
/// from the same prediction set.
pub fn delta_gap(oracle_rate: f64, top1_rate: f64) -> f64 {
    top1_rate - oracle_rate
}

/// Unbiased pass@k estimator 1 - C(n-c, k)/C(n, k), evaluated as a running
/// product so intermediate values never overflow.
pub fn pass_at_k(n: u64, c: u64, k: u64) -> Result<f64> {
    if c > n || k == 0 || k > n {
        return Err(Error::Argument(format!(
            "pass@k needs 0 <= c <= n and 1 <= k <= n, got n={n} c={c} k={k}"
        )));
    }
    if n - c < k {
        return Ok(1.0);
    }
    let mut miss_all = 1.0;
    for i in 0..k {
        miss_all *= (n - c - i) as f64 / (n - i) as f64;
    }
    Ok(1.0 - miss_all)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub min_area_ratio: f64,
    pub max_area_ratio: f64,
    /// Rollouts per task for difficulty preselection.
    pub preselect_rollouts: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self { min_area_ratio: 0.001, max_area_ratio: 0.9, preselect_rollouts: 8 }
    }
}

impl FilterConfig {
    pub fn validated(self) -> Result<Self> {
        if !(self.min_area_ratio > 0.0 && self.min_area_ratio < self.max_area_ratio && self.max_area_ratio < 1.0) {
            return Err(Error::Argument(format!(
                "area ratio window must satisfy 0 < min < max < 1, got [{}, {}]",
                self.min_area_ratio, self.max_area_ratio
            )));
        }
        if self.preselect_rollouts == 0 {
            return Err(Error::Argument("preselect_rollouts must be positive".into()));
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    MalformedBox,
    OutsideViewport,
    AreaTooSmall,
    AreaTooLarge,
    UniformSuccess,
    UniformFailure,
    SemanticReject,
}

impl RejectReason {
    pub fn name(self) -> &'static str {
        match self {
            Self::MalformedBox => "malformed_box",
            Self::OutsideViewport => "outside_viewport",
            Self::AreaTooSmall => "area_too_small",
            Self::AreaTooLarge => "area_too_large",
            Self::UniformSuccess => "uniform_success",
            Self::UniformFailure => "uniform_failure",
            Self::SemanticReject => "semantic_reject",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterDecision {
    Keep,
    Reject(RejectReason),
}

impl FilterDecision {
    pub fn kept(self) -> bool {
        matches!(self, Self::Keep)
    }
}

/// Geometric sanity checks on the target box: well-formed, inside the
/// viewport, and with an area ratio inside the configured window.
pub fn static_filter(task: &GroundingTask, cfg: &FilterConfig) -> FilterDecision {
    let b = task.target;
    let coords = [b.x_min, b.y_min, b.x_max, b.y_max];
    if coords.iter().any(|v| !v.is_finite()) || b.x_min >= b.x_max || b.y_min >= b.y_max {
        return FilterDecision::Reject(RejectReason::MalformedBox);
    }
    if b.x_min < 0.0 || b.y_min < 0.0 || b.x_max > 1.0 || b.y_max > 1.0 {
        return FilterDecision::Reject(RejectReason::OutsideViewport);
    }
    let ratio = b.area();
    if ratio < cfg.min_area_ratio {
        return FilterDecision::Reject(RejectReason::AreaTooSmall);
    }
    if ratio > cfg.max_area_ratio {
        return FilterDecision::Reject(RejectReason::AreaTooLarge);
    }
    FilterDecision::Keep
}

/// Keeps only tasks with a mixed success profile across rollouts; uniformly
/// solved or uniformly failed tasks carry no learning signal.
pub fn difficulty_preselect(outcomes: &[bool]) -> Result<FilterDecision> {
    if outcomes.is_empty() {
        return Err(Error::EmptySet);
    }
    if outcomes.iter().all(|&o| o) {
        return Ok(FilterDecision::Reject(RejectReason::UniformSuccess));
    }
    if outcomes.iter().all(|&o| !o) {
        return Ok(FilterDecision::Reject(RejectReason::UniformFailure));
    }
    Ok(FilterDecision::Keep)
}

/// Pluggable semantic check; `Err` means the verifier itself failed.
pub trait SemanticVerifier {
    fn verify(&self, task: &GroundingTask) -> std::result::Result<bool, String>;
}

/// The built-in pass-through verifier.
pub struct AcceptAll;

impl SemanticVerifier for AcceptAll {
    fn verify(&self, _task: &GroundingTask) -> std::result::Result<bool, String> {
        Ok(true)
    }
}

/// Delegates to the verifier; a verifier failure keeps the task and returns
/// the warning instead of dropping data on infrastructure errors.
pub fn semantic_verify(
    task: &GroundingTask,
    verifier: &dyn SemanticVerifier,
) -> (FilterDecision, Option<String>) {
    match verifier.verify(task) {
        Ok(true) => (FilterDecision::Keep, None),
        Ok(false) => (FilterDecision::Reject(RejectReason::SemanticReject), None),
        Err(message) => (
            FilterDecision::Keep,
            Some(format!("semantic verifier failed on {}: {message}", task.task_id)),
        ),
    }
}
