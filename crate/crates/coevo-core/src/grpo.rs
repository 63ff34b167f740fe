//! Group-relative policy optimization arithmetic: per-group reward
//! normalization, the clipped surrogate, a low-variance KL estimate, and the
//! online filters that drop truncated or uninformative rollout groups.
//!
//! Everything here works on supplied probability ratios; the policies that
//! produce them live elsewhere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub reward: f64,
    /// Current-over-behavior policy ratio for this trajectory.
    pub prob_ratio: f64,
    /// Reference-over-current policy ratio, fed to the KL estimator.
    pub ref_ratio: f64,
    pub truncated: bool,
    pub length: u64,
}

impl TrajectoryRecord {
    pub fn new(reward: f64, prob_ratio: f64, ref_ratio: f64, truncated: bool, length: u64) -> Result<Self> {
        if !(prob_ratio > 0.0) || !(ref_ratio > 0.0) {
            return Err(Error::Ratio(if prob_ratio > 0.0 { ref_ratio } else { prob_ratio }));
        }
        if length == 0 {
            return Err(Error::Argument("trajectory length must be positive".into()));
        }
        Ok(Self { reward, prob_ratio, ref_ratio, truncated, length })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutGroup {
    pub query_id: String,
    pub records: Vec<TrajectoryRecord>,
}

impl RolloutGroup {
    pub fn new(query_id: impl Into<String>, records: Vec<TrajectoryRecord>) -> Self {
        Self { query_id: query_id.into(), records }
    }

    pub fn size(&self) -> usize {
        self.records.len()
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.reward).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdMode {
    Population,
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrpoConfig {
    pub clip_epsilon: f64,
    pub kl_beta: f64,
    pub adv_epsilon: f64,
    pub std_mode: StdMode,
}

impl Default for GrpoConfig {
    fn default() -> Self {
        Self {
            clip_epsilon: 0.25,
            kl_beta: 0.0,
            adv_epsilon: 1e-8,
            std_mode: StdMode::Population,
        }
    }
}

impl GrpoConfig {
    pub fn validated(self) -> Result<Self> {
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            return Err(Error::Argument(format!(
                "clip_epsilon must lie in (0, 1), got {}",
                self.clip_epsilon
            )));
        }
        if !(self.kl_beta >= 0.0) {
            return Err(Error::Argument(format!(
                "kl_beta must be nonnegative, got {}",
                self.kl_beta
            )));
        }
        if !(self.adv_epsilon > 0.0) {
            return Err(Error::Argument(format!(
                "adv_epsilon must be positive, got {}",
                self.adv_epsilon
            )));
        }
        Ok(self)
    }
}

/// A_i = (r_i − mean) / (std + ε), std over the group per `std_mode`.
pub fn group_advantages(group: &RolloutGroup, cfg: &GrpoConfig) -> Result<Vec<f64>> {
    let g = group.size();
    if g < 2 {
        return Err(Error::GroupSize(g));
    }
    let n = g as f64;
    let mean = group.records.iter().map(|r| r.reward).sum::<f64>() / n;
    let ss: f64 = group.records.iter().map(|r| (r.reward - mean).powi(2)).sum();
    let denom = match cfg.std_mode {
        StdMode::Population => n,
        StdMode::Sample => n - 1.0,
    };
    let std = (ss / denom).sqrt();
    Ok(group
        .records
        .iter()
        .map(|r| (r.reward - mean) / (std + cfg.adv_epsilon))
        .collect())
}

/// min(r·A, clip(r, 1−ε, 1+ε)·A)
pub fn clipped_surrogate_term(prob_ratio: f64, advantage: f64, cfg: &GrpoConfig) -> f64 {
    let clipped = prob_ratio.clamp(1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon);
    (prob_ratio * advantage).min(clipped * advantage)
}

/// The k3 estimator r − 1 − ln r; nonnegative, zero only at r = 1.
pub fn low_var_kl(ref_ratio: f64) -> Result<f64> {
    if !(ref_ratio > 0.0) {
        return Err(Error::Ratio(ref_ratio));
    }
    Ok(ref_ratio - 1.0 - ref_ratio.ln())
}

/// (1/G) Σ_i [surrogate_i − β·k3_i]
pub fn objective_value(group: &RolloutGroup, cfg: &GrpoConfig) -> Result<f64> {
    let advantages = group_advantages(group, cfg)?;
    let mut total = 0.0;
    for (record, &a) in group.records.iter().zip(&advantages) {
        total += clipped_surrogate_term(record.prob_ratio, a, cfg)
            - cfg.kl_beta * low_var_kl(record.ref_ratio)?;
    }
    Ok(total / group.size() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    Undersized,
    ZeroAdvantage,
}

impl DropReason {
    pub fn name(self) -> &'static str {
        match self {
            Self::Undersized => "undersized",
            Self::ZeroAdvantage => "zero_advantage",
        }
    }
}

/// Online batch filter: strip truncated trajectories from every group, then
/// drop groups left with fewer than two records, then drop groups whose
/// remaining rewards are all identical.
pub fn filter_groups(groups: Vec<RolloutGroup>) -> (Vec<RolloutGroup>, Vec<(RolloutGroup, DropReason)>) {
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for mut group in groups {
        group.records.retain(|r| !r.truncated);
        if group.size() < 2 {
            dropped.push((group, DropReason::Undersized));
            continue;
        }
        let first = group.records[0].reward;
        if group.records.iter().all(|r| r.reward == first) {
            dropped.push((group, DropReason::ZeroAdvantage));
            continue;
        }
        kept.push(group);
    }
    (kept, dropped)
}
