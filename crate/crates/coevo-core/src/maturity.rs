//! Maturity-gated reward weighting.
//!
//! Each agent tracks the other's competence as an EMA over batch-mean reward
//! signals. The proposer's coverage reward is scaled by critic maturity, the
//! critic's ranking reward by proposer maturity, so the harder objective only
//! kicks in once the counterpart is doing its job.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rewards::RewardBreakdown;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaturityState {
    /// Proposer maturity, tracks batch-mean accuracy reward.
    pub c_p: f64,
    /// Critic ("judge") maturity, tracks batch-mean NDCG reward.
    pub c_j: f64,
    pub alpha: f64,
    pub step: u64,
}

impl MaturityState {
    /// Fresh state: both agents start fully immature.
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Argument(format!(
                "maturity momentum must lie in (0, 1], got {alpha}"
            )));
        }
        Ok(Self { c_p: 0.0, c_j: 0.0, alpha, step: 0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedRewards {
    pub r_proposer: f64,
    pub r_critic: f64,
    pub c_j_used: f64,
    pub c_p_used: f64,
}

/// One EMA step over clamped batch-mean signals. Returns the successor state;
/// the input is left untouched.
pub fn update(
    state: MaturityState,
    batch_mean_r_acc: f64,
    batch_mean_r_ndcg: f64,
) -> Result<MaturityState> {
    if !batch_mean_r_acc.is_finite() || !batch_mean_r_ndcg.is_finite() {
        return Err(Error::Signal(format!(
            "maturity signals must be finite, got r_acc={batch_mean_r_acc}, r_ndcg={batch_mean_r_ndcg}"
        )));
    }
    let a = state.alpha;
    Ok(MaturityState {
        c_p: (1.0 - a) * state.c_p + a * batch_mean_r_acc.clamp(0.0, 1.0),
        c_j: (1.0 - a) * state.c_j + a * batch_mean_r_ndcg.clamp(0.0, 1.0),
        alpha: a,
        step: state.step + 1,
    })
}

/// Applies the maturity gates with the *current* (pre-update) weights.
pub fn weighted_rewards(state: &MaturityState, breakdown: &RewardBreakdown) -> Result<WeightedRewards> {
    let (r_top1, r_ndcg) = match (breakdown.r_top1, breakdown.r_ndcg) {
        (Some(t), Some(n)) => (t, n),
        _ => {
            return Err(Error::Argument(
                "weighted_rewards needs a breakdown with critic terms populated".into(),
            ))
        }
    };
    Ok(WeightedRewards {
        r_proposer: breakdown.r_acc + state.c_j * breakdown.r_cov,
        r_critic: r_top1 + state.c_p * r_ndcg,
        c_j_used: state.c_j,
        c_p_used: state.c_p,
    })
}
