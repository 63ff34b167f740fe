//! Parametric proposer and critic policies with analytic log-densities and
//! score-function gradients, so policy-gradient updates and probability
//! ratios are exact rather than estimated.
//!
//! Proposer: a two-parameter Gaussian mixture — sample near the target with
//! probability sigmoid(target_logit), else near a uniformly chosen
//! distractor, with per-axis spread exp(log_spread).
//!
//! Critic: Plackett-Luce over perceived scores; `blindness` injects score
//! noise that doubles on candidates sitting on a distractor, modeling a
//! judge that confuses plausible negatives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{gaussian_score, hit, CandidateSet, GroundingTask, Point2, ScoringConfig};
use crate::rewards::RankedList;
use crate::simenv::rng::RngStream;

const TAU: f64 = std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProposerPolicy {
    /// Log-odds of drawing from the target mode.
    pub target_logit: f64,
    /// ln of the per-axis Gaussian spread.
    pub log_spread: f64,
    /// Candidates per pass.
    pub k: usize,
}

impl ProposerPolicy {
    pub fn validated(self) -> Result<Self> {
        if self.k == 0 {
            return Err(Error::Argument("proposer K must be at least 1".into()));
        }
        if !self.target_logit.is_finite() || !self.log_spread.is_finite() {
            return Err(Error::Argument("proposer parameters must be finite".into()));
        }
        Ok(self)
    }

    pub fn spread(&self) -> f64 {
        self.log_spread.exp()
    }

    pub fn target_prob(&self) -> f64 {
        1.0 / (1.0 + (-self.target_logit).exp())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticPolicy {
    /// Plackett-Luce inverse temperature over perceived scores.
    pub sharpness: f64,
    /// Std of the score-observation noise; doubled on distractor hits.
    pub blindness: f64,
}

impl CriticPolicy {
    pub fn validated(self) -> Result<Self> {
        if !(self.sharpness > 0.0) || !self.sharpness.is_finite() {
            return Err(Error::Argument(format!(
                "critic sharpness must be positive and finite, got {}",
                self.sharpness
            )));
        }
        if !(self.blindness >= 0.0) || !self.blindness.is_finite() {
            return Err(Error::Argument(format!(
                "critic blindness must be nonnegative and finite, got {}",
                self.blindness
            )));
        }
        Ok(self)
    }
}

/// One proposer pass: the clipped candidates plus everything needed to
/// re-evaluate the pass under different parameters.
#[derive(Debug, Clone)]
pub struct ProposalSample {
    pub candidates: CandidateSet,
    /// Joint log-density of the pre-clip draws under the sampling policy.
    pub log_density: f64,
    /// Pre-clip draws; densities and gradients are taken at these points.
    pub raw_points: Vec<Point2>,
    /// How many draws were moved by viewport clipping.
    pub clipped_count: usize,
}

fn mode_centers(task: &GroundingTask) -> (Point2, Vec<Point2>) {
    (
        task.target.center(),
        task.distractors.iter().map(|d| d.center()).collect(),
    )
}

fn gaussian_2d(p: Point2, center: Point2, sigma: f64) -> f64 {
    let dx = p.x - center.x;
    let dy = p.y - center.y;
    (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp() / (TAU * sigma * sigma)
}

/// Mixture density of one pre-clip draw.
fn point_density(policy: &ProposerPolicy, target: Point2, distractors: &[Point2], p: Point2) -> f64 {
    let sigma = policy.spread();
    let g_target = gaussian_2d(p, target, sigma);
    if distractors.is_empty() {
        return g_target;
    }
    let w = policy.target_prob();
    let g_distractor: f64 =
        distractors.iter().map(|&c| gaussian_2d(p, c, sigma)).sum::<f64>() / distractors.len() as f64;
    w * g_target + (1.0 - w) * g_distractor
}

/// Joint log-density of a set of pre-clip draws under `policy`.
pub fn proposer_log_density(policy: &ProposerPolicy, task: &GroundingTask, raw_points: &[Point2]) -> f64 {
    let (target, distractors) = mode_centers(task);
    raw_points
        .iter()
        .map(|&p| point_density(policy, target, &distractors, p).ln())
        .sum()
}

/// Analytic gradient of `proposer_log_density` in (target_logit, log_spread).
pub fn proposer_log_density_grad(
    policy: &ProposerPolicy,
    task: &GroundingTask,
    raw_points: &[Point2],
) -> (f64, f64) {
    let (target, distractors) = mode_centers(task);
    let sigma = policy.spread();
    let w = policy.target_prob();
    let n_d = distractors.len() as f64;
    let mut d_logit = 0.0;
    let mut d_spread = 0.0;
    for &p in raw_points {
        let r2_target = {
            let (dx, dy) = (p.x - target.x, p.y - target.y);
            dx * dx + dy * dy
        };
        let g_target = gaussian_2d(p, target, sigma);
        if distractors.is_empty() {
            // pure target mode: density does not depend on the logit
            d_spread += r2_target / (sigma * sigma) - 2.0;
            continue;
        }
        let mut g_mix = 0.0;
        let mut dg_mix_dspread = 0.0;
        for &c in &distractors {
            let (dx, dy) = (p.x - c.x, p.y - c.y);
            let r2 = dx * dx + dy * dy;
            let g = gaussian_2d(p, c, sigma);
            g_mix += g / n_d;
            dg_mix_dspread += g * (r2 / (sigma * sigma) - 2.0) / n_d;
        }
        let f = w * g_target + (1.0 - w) * g_mix;
        d_logit += w * (1.0 - w) * (g_target - g_mix) / f;
        let df_dspread =
            w * g_target * (r2_target / (sigma * sigma) - 2.0) + (1.0 - w) * dg_mix_dspread;
        d_spread += df_dspread / f;
    }
    (d_logit, d_spread)
}

/// Draws K candidates i.i.d. from the mixture, clips them to the viewport,
/// and reports the joint pre-clip log-density.
pub fn sample_candidates(
    policy: &ProposerPolicy,
    task: &GroundingTask,
    rng: &mut RngStream,
) -> Result<ProposalSample> {
    let policy = policy.validated()?;
    let (target, distractors) = mode_centers(task);
    let sigma = policy.spread();
    let w = policy.target_prob();
    let mut raw_points = Vec::with_capacity(policy.k);
    let mut clipped = Vec::with_capacity(policy.k);
    let mut clipped_count = 0;
    for _ in 0..policy.k {
        let take_target = distractors.is_empty() || rng.next_f64() < w;
        let center = if take_target {
            target
        } else {
            distractors[(rng.next_u64() % distractors.len() as u64) as usize]
        };
        let raw = Point2::new(
            center.x + sigma * rng.next_gaussian(),
            center.y + sigma * rng.next_gaussian(),
        );
        let point = raw.clamped();
        if point != raw {
            clipped_count += 1;
        }
        raw_points.push(raw);
        clipped.push(point);
    }
    let log_density = proposer_log_density(&policy, task, &raw_points);
    Ok(ProposalSample {
        candidates: CandidateSet::new(clipped)?,
        log_density,
        raw_points,
        clipped_count,
    })
}

/// One critic pass: the sampled ranking plus the frozen noise draws needed to
/// re-evaluate it under different parameters.
#[derive(Debug, Clone)]
pub struct CriticSample {
    pub ranking: RankedList,
    /// Plackett-Luce log-probability of `ranking` under the sampling policy.
    pub log_density: f64,
    pub true_scores: Vec<f64>,
    /// Standard-normal observation noise per candidate.
    pub noise: Vec<f64>,
    /// Noise multiplier per candidate: 2 on distractor hits, else 1.
    pub noise_mult: Vec<f64>,
    pub perceived: Vec<f64>,
}

fn perceived_scores(policy: &CriticPolicy, scores: &[f64], noise: &[f64], mult: &[f64]) -> Vec<f64> {
    scores
        .iter()
        .zip(noise)
        .zip(mult)
        .map(|((&s, &z), &m)| s + policy.blindness * m * z)
        .collect()
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Plackett-Luce log-probability of `ranking` given frozen noise draws.
pub fn critic_log_density(
    policy: &CriticPolicy,
    true_scores: &[f64],
    noise: &[f64],
    noise_mult: &[f64],
    ranking: &RankedList,
) -> f64 {
    let perceived = perceived_scores(policy, true_scores, noise, noise_mult);
    let k = perceived.len();
    let mut remaining: Vec<usize> = (0..k).collect();
    let mut logp = 0.0;
    for &chosen in ranking.order() {
        let utilities = remaining.iter().map(|&i| policy.sharpness * perceived[i]);
        logp += policy.sharpness * perceived[chosen] - log_sum_exp(utilities);
        remaining.retain(|&i| i != chosen);
    }
    logp
}

/// Analytic gradient of `critic_log_density` in (sharpness, blindness).
pub fn critic_log_density_grad(
    policy: &CriticPolicy,
    true_scores: &[f64],
    noise: &[f64],
    noise_mult: &[f64],
    ranking: &RankedList,
) -> (f64, f64) {
    let perceived = perceived_scores(policy, true_scores, noise, noise_mult);
    let noise_term: Vec<f64> = noise.iter().zip(noise_mult).map(|(&z, &m)| m * z).collect();
    let k = perceived.len();
    let mut remaining: Vec<usize> = (0..k).collect();
    let mut d_sharp = 0.0;
    let mut d_blind = 0.0;
    for &chosen in ranking.order() {
        let max_u = remaining
            .iter()
            .map(|&i| policy.sharpness * perceived[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = remaining
            .iter()
            .map(|&i| (policy.sharpness * perceived[i] - max_u).exp())
            .collect();
        let z: f64 = weights.iter().sum();
        let expected_perceived: f64 = remaining
            .iter()
            .zip(&weights)
            .map(|(&i, &w)| w / z * perceived[i])
            .sum();
        let expected_noise: f64 = remaining
            .iter()
            .zip(&weights)
            .map(|(&i, &w)| w / z * noise_term[i])
            .sum();
        d_sharp += perceived[chosen] - expected_perceived;
        d_blind += policy.sharpness * (noise_term[chosen] - expected_noise);
        remaining.retain(|&i| i != chosen);
    }
    (d_sharp, d_blind)
}

/// Ranks the candidates by sampling a Plackett-Luce permutation over noisy
/// perceived scores.
pub fn critic_rank(
    policy: &CriticPolicy,
    task: &GroundingTask,
    cands: &CandidateSet,
    scoring: &ScoringConfig,
    rng: &mut RngStream,
) -> Result<CriticSample> {
    let policy = policy.validated()?;
    let true_scores: Vec<f64> = cands
        .points()
        .iter()
        .map(|&p| gaussian_score(p, task, scoring))
        .collect();
    let noise_mult: Vec<f64> = cands
        .points()
        .iter()
        .map(|&p| {
            if task.distractors.iter().any(|d| hit(p, d, scoring)) {
                2.0
            } else {
                1.0
            }
        })
        .collect();
    let noise: Vec<f64> = (0..cands.k()).map(|_| rng.next_gaussian()).collect();
    let perceived = perceived_scores(&policy, &true_scores, &noise, &noise_mult);

    let mut remaining: Vec<usize> = (0..cands.k()).collect();
    let mut order = Vec::with_capacity(cands.k());
    while !remaining.is_empty() {
        let max_u = remaining
            .iter()
            .map(|&i| policy.sharpness * perceived[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = remaining
            .iter()
            .map(|&i| (policy.sharpness * perceived[i] - max_u).exp())
            .collect();
        let total: f64 = weights.iter().sum();
        let mut u = rng.next_f64() * total;
        let mut picked = remaining.len() - 1;
        for (slot, &w) in weights.iter().enumerate() {
            if u < w {
                picked = slot;
                break;
            }
            u -= w;
        }
        order.push(remaining.remove(picked));
    }
    let ranking = RankedList::new(order)?;
    let log_density = critic_log_density(&policy, &true_scores, &noise, &noise_mult, &ranking);
    Ok(CriticSample {
        ranking,
        log_density,
        true_scores,
        noise,
        noise_mult,
        perceived,
    })
}

fn reinforce_delta(grads: &[(f64, f64)], advantages: &[f64]) -> Result<(f64, f64)> {
    if grads.len() != advantages.len() {
        return Err(Error::Shape(format!(
            "{} gradients for {} advantages",
            grads.len(),
            advantages.len()
        )));
    }
    if grads.is_empty() {
        return Err(Error::EmptySet);
    }
    let n = grads.len() as f64;
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for (&(g0, g1), &a) in grads.iter().zip(advantages) {
        d0 += a * g0;
        d1 += a * g1;
    }
    let delta = (d0 / n, d1 / n);
    if !delta.0.is_finite() || !delta.1.is_finite() {
        return Err(Error::Gradient(format!(
            "non-finite policy-gradient step ({}, {})",
            delta.0, delta.1
        )));
    }
    Ok(delta)
}

/// REINFORCE step for the proposer: params += lr * mean(A_i * grad_i), with
/// wide containment clamps so the parameters stay in a numerically sane range.
pub fn update_proposer(
    policy: &ProposerPolicy,
    grads: &[(f64, f64)],
    advantages: &[f64],
    lr: f64,
) -> Result<ProposerPolicy> {
    let (d_logit, d_spread) = reinforce_delta(grads, advantages)?;
    Ok(ProposerPolicy {
        target_logit: (policy.target_logit + lr * d_logit).clamp(-20.0, 20.0),
        log_spread: (policy.log_spread + lr * d_spread).clamp(-20.0, 2.0),
        k: policy.k,
    })
}

/// REINFORCE step for the critic, projected back to sharpness > 0 and
/// blindness >= 0.
pub fn update_critic(
    policy: &CriticPolicy,
    grads: &[(f64, f64)],
    advantages: &[f64],
    lr: f64,
) -> Result<CriticPolicy> {
    let (d_sharp, d_blind) = reinforce_delta(grads, advantages)?;
    Ok(CriticPolicy {
        sharpness: (policy.sharpness + lr * d_sharp).clamp(1e-6, 1e7),
        blindness: (policy.blindness + lr * d_blind).max(0.0),
    })
}
