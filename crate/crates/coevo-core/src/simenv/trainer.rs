//! The co-evolution loop: generate screens, roll out propose-then-judge
//! episodes in groups, convert rewards to group-relative advantages, apply
//! REINFORCE updates to both policies, update maturities, and evaluate on a
//! fixed held-out set every step.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grpo::{filter_groups, group_advantages, GrpoConfig, RolloutGroup, TrajectoryRecord};
use crate::maturity::{update as maturity_update, weighted_rewards, MaturityState, WeightedRewards};
use crate::model::{hit, GroundingTask, Point2, ScoringConfig};
use crate::rewards::{compute_breakdown, CoverageConfig, RewardBreakdown};
use crate::simenv::policy::{
    critic_log_density_grad, critic_rank, proposer_log_density_grad, sample_candidates,
    update_critic, update_proposer, CriticPolicy, ProposerPolicy,
};
use crate::simenv::rng::RngStream;
use crate::simenv::screen::{generate_screen, ScreenSpec};

/// Stream tag for task generation (the episode slot no rollout ever uses).
const STREAM_SCREEN: u64 = u64::MAX;
/// Step tag reserved for the held-out evaluation set.
const STEP_EVAL: u64 = u64::MAX;

/// Screen shape shared by every generated task; seed and target vary per task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreenTemplate {
    pub grid_cols: u32,
    pub grid_rows: u32,
    pub element_fill: f64,
    pub element_size_jitter: f64,
    pub width_px: u32,
    pub height_px: u32,
}

impl Default for ScreenTemplate {
    fn default() -> Self {
        Self {
            grid_cols: 8,
            grid_rows: 6,
            element_fill: 0.5,
            element_size_jitter: 0.2,
            width_px: 1920,
            height_px: 1080,
        }
    }
}

impl ScreenTemplate {
    fn to_spec(self, seed: u64, target_cell: u32) -> ScreenSpec {
        ScreenSpec {
            grid_cols: self.grid_cols,
            grid_rows: self.grid_rows,
            element_fill: self.element_fill,
            target_cell,
            element_size_jitter: self.element_size_jitter,
            seed,
            width_px: self.width_px,
            height_px: self.height_px,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoEvolutionConfig {
    pub steps: u64,
    pub tasks_per_step: usize,
    pub group_size: usize,
    pub learning_rate: f64,
    pub scoring: ScoringConfig,
    pub coverage: CoverageConfig,
    pub grpo: GrpoConfig,
    /// Maturity EMA momentum.
    pub alpha: f64,
    pub master_seed: u64,
    pub screen: ScreenTemplate,
    pub eval_tasks: usize,
    pub proposer_init: ProposerPolicy,
    pub critic_init: CriticPolicy,
}

impl Default for CoEvolutionConfig {
    fn default() -> Self {
        Self {
            steps: 300,
            tasks_per_step: 8,
            group_size: 8,
            learning_rate: 0.05,
            scoring: ScoringConfig::default(),
            coverage: CoverageConfig::default(),
            grpo: GrpoConfig::default(),
            alpha: 0.01,
            master_seed: 0,
            screen: ScreenTemplate::default(),
            eval_tasks: 500,
            proposer_init: ProposerPolicy { target_logit: -1.0, log_spread: -2.1, k: 5 },
            critic_init: CriticPolicy { sharpness: 2.0, blindness: 0.5 },
        }
    }
}

impl CoEvolutionConfig {
    pub fn validated(self) -> Result<Self> {
        if self.tasks_per_step == 0 {
            return Err(Error::Argument("tasks_per_step must be positive".into()));
        }
        if self.group_size < 2 {
            return Err(Error::Argument(
                "group_size must be at least 2 for group-relative advantages".into(),
            ));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Argument(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.eval_tasks == 0 {
            return Err(Error::Argument("eval_tasks must be positive".into()));
        }
        self.scoring.validated()?;
        self.coverage.validated()?;
        self.grpo.validated()?;
        self.proposer_init.validated()?;
        self.critic_init.validated()?;
        MaturityState::new(self.alpha)?;
        self.screen.to_spec(0, 0).validated()?;
        Ok(self)
    }
}

/// Everything measured in one propose-then-judge episode.
#[derive(Debug, Clone)]
pub struct EpisodeMetrics {
    pub breakdown: RewardBreakdown,
    pub weighted: WeightedRewards,
    pub oracle_hit: bool,
    pub top1_hit: bool,
    pub proposer_grad: (f64, f64),
    pub critic_grad: (f64, f64),
    pub proposer_log_density: f64,
    pub critic_log_density: f64,
    pub clipped_draws: usize,
    pub candidates: Vec<Point2>,
    pub ranking: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct GroupRollout {
    pub proposer_group: RolloutGroup,
    pub critic_group: RolloutGroup,
    pub episodes: Vec<EpisodeMetrics>,
}

fn run_episode(
    proposer: &ProposerPolicy,
    critic: &CriticPolicy,
    task: &GroundingTask,
    maturity: &MaturityState,
    scoring: &ScoringConfig,
    coverage: &CoverageConfig,
    rng: &mut RngStream,
) -> Result<EpisodeMetrics> {
    let sample = sample_candidates(proposer, task, rng)?;
    let judged = critic_rank(critic, task, &sample.candidates, scoring, rng)?;
    let breakdown = compute_breakdown(
        &sample.candidates,
        task,
        Some(&judged.ranking),
        scoring,
        coverage,
    )?;
    let weighted = weighted_rewards(maturity, &breakdown)?;
    let oracle_hit = sample.candidates.points().iter().any(|&p| hit(p, &task.target, scoring));
    let top1_hit = hit(
        sample.candidates.points()[judged.ranking.order()[0]],
        &task.target,
        scoring,
    );
    Ok(EpisodeMetrics {
        proposer_grad: proposer_log_density_grad(proposer, task, &sample.raw_points),
        critic_grad: critic_log_density_grad(
            critic,
            &judged.true_scores,
            &judged.noise,
            &judged.noise_mult,
            &judged.ranking,
        ),
        proposer_log_density: sample.log_density,
        critic_log_density: judged.log_density,
        clipped_draws: sample.clipped_count,
        candidates: sample.candidates.points().to_vec(),
        ranking: judged.ranking.order().to_vec(),
        breakdown,
        weighted,
        oracle_hit,
        top1_hit,
    })
}

/// Runs `group_size` independent episodes on one task; episode e draws from
/// the stream keyed by (master_seed, step, task_index, e).
#[allow(clippy::too_many_arguments)]
pub fn rollout_group(
    proposer: &ProposerPolicy,
    critic: &CriticPolicy,
    task: &GroundingTask,
    group_size: usize,
    maturity: &MaturityState,
    scoring: &ScoringConfig,
    coverage: &CoverageConfig,
    stream_key: (u64, u64, u64),
) -> Result<GroupRollout> {
    let (master_seed, step, task_index) = stream_key;
    let mut episodes = Vec::with_capacity(group_size);
    for e in 0..group_size {
        let mut rng = RngStream::from_parts(master_seed, step, task_index, e as u64);
        episodes.push(run_episode(proposer, critic, task, maturity, scoring, coverage, &mut rng)?);
    }
    let record = |reward: f64, k: usize| TrajectoryRecord {
        reward,
        prob_ratio: 1.0,
        ref_ratio: 1.0,
        truncated: false,
        length: k as u64,
    };
    let proposer_group = RolloutGroup::new(
        task.task_id.clone(),
        episodes.iter().map(|e| record(e.weighted.r_proposer, e.candidates.len())).collect(),
    );
    let critic_group = RolloutGroup::new(
        task.task_id.clone(),
        episodes.iter().map(|e| record(e.weighted.r_critic, e.candidates.len())).collect(),
    );
    Ok(GroupRollout { proposer_group, critic_group, episodes })
}

fn make_task(cfg: &CoEvolutionConfig, step: u64, index: u64) -> Result<GroundingTask> {
    let mut rng = RngStream::from_parts(cfg.master_seed, step, index, STREAM_SCREEN);
    let seed = rng.next_u64();
    let cells = cfg.screen.grid_cols * cfg.screen.grid_rows;
    let target_cell = (rng.next_u64() % cells as u64) as u32;
    generate_screen(&cfg.screen.to_spec(seed, target_cell))
}

/// The held-out evaluation tasks; keyed off the reserved eval step so they
/// never coincide with training screens.
pub fn build_eval_tasks(cfg: &CoEvolutionConfig) -> Result<Vec<GroundingTask>> {
    (0..cfg.eval_tasks as u64).map(|i| make_task(cfg, STEP_EVAL, i)).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalPrediction {
    pub task_id: String,
    pub points: Vec<Point2>,
    pub ranking: Vec<usize>,
    pub oracle_hit: bool,
    pub top1_hit: bool,
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub oracle_at_k: f64,
    pub top1: f64,
    pub predictions: Vec<EvalPrediction>,
}

/// Evaluates the current policies on the held-out tasks with frozen draws
/// (task i always replays stream (master_seed, EVAL, i, 0)), so metric
/// movement across steps reflects parameter movement only.
pub fn evaluate_policies(
    proposer: &ProposerPolicy,
    critic: &CriticPolicy,
    tasks: &[GroundingTask],
    scoring: &ScoringConfig,
    master_seed: u64,
) -> Result<EvalOutcome> {
    let predictions: Vec<EvalPrediction> = tasks
        .par_iter()
        .enumerate()
        .map(|(i, task)| -> Result<EvalPrediction> {
            let mut rng = RngStream::from_parts(master_seed, STEP_EVAL, i as u64, 0);
            let sample = sample_candidates(proposer, task, &mut rng)?;
            let judged = critic_rank(critic, task, &sample.candidates, scoring, &mut rng)?;
            let points = sample.candidates.points().to_vec();
            let oracle_hit = points.iter().any(|&p| hit(p, &task.target, scoring));
            let top1_hit = hit(points[judged.ranking.order()[0]], &task.target, scoring);
            Ok(EvalPrediction {
                task_id: task.task_id.clone(),
                points,
                ranking: judged.ranking.order().to_vec(),
                oracle_hit,
                top1_hit,
            })
        })
        .collect::<Result<_>>()?;
    let n = predictions.len() as f64;
    let oracle = predictions.iter().filter(|p| p.oracle_hit).count() as f64 / n;
    let top1 = predictions.iter().filter(|p| p.top1_hit).count() as f64 / n;
    Ok(EvalOutcome { oracle_at_k: oracle, top1, predictions })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub step: u64,
    pub c_p: f64,
    pub c_j: f64,
    pub mean_r_acc: f64,
    pub mean_r_cov: f64,
    pub mean_r_top1: f64,
    pub mean_r_ndcg: f64,
    pub mean_r_proposer: f64,
    pub mean_r_critic: f64,
    pub oracle_at_k: f64,
    pub top1: f64,
    pub target_logit: f64,
    pub log_spread: f64,
    pub sharpness: f64,
    pub blindness: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingLog {
    pub rows: Vec<LogRow>,
    pub final_proposer: ProposerPolicy,
    pub final_critic: CriticPolicy,
}

struct StepStats {
    mean_r_acc: f64,
    mean_r_cov: f64,
    mean_r_top1: f64,
    mean_r_ndcg: f64,
    mean_r_proposer: f64,
    mean_r_critic: f64,
}

fn batch_stats(rollouts: &[GroupRollout]) -> StepStats {
    let mut n = 0.0;
    let mut acc = 0.0;
    let mut cov = 0.0;
    let mut top1 = 0.0;
    let mut ndcg = 0.0;
    let mut proposer = 0.0;
    let mut critic = 0.0;
    for rollout in rollouts {
        for e in &rollout.episodes {
            n += 1.0;
            acc += e.breakdown.r_acc;
            cov += e.breakdown.r_cov;
            top1 += e.breakdown.r_top1.unwrap_or(0.0);
            ndcg += e.breakdown.r_ndcg.unwrap_or(0.0);
            proposer += e.weighted.r_proposer;
            critic += e.weighted.r_critic;
        }
    }
    StepStats {
        mean_r_acc: acc / n,
        mean_r_cov: cov / n,
        mean_r_top1: top1 / n,
        mean_r_ndcg: ndcg / n,
        mean_r_proposer: proposer / n,
        mean_r_critic: critic / n,
    }
}

/// The full loop. Deterministic in `cfg.master_seed`: rollouts within a step
/// run in parallel on counter-keyed streams and are reduced in task order.
pub fn run_co_evolution(cfg: &CoEvolutionConfig) -> Result<TrainingLog> {
    let cfg = cfg.clone().validated()?;
    let eval_set = build_eval_tasks(&cfg)?;
    let mut proposer = cfg.proposer_init;
    let mut critic = cfg.critic_init;
    let mut maturity = MaturityState::new(cfg.alpha)?;

    let mut rows = Vec::with_capacity(cfg.steps as usize + 1);
    let eval0 = evaluate_policies(&proposer, &critic, &eval_set, &cfg.scoring, cfg.master_seed)?;
    rows.push(LogRow {
        step: 0,
        c_p: maturity.c_p,
        c_j: maturity.c_j,
        mean_r_acc: 0.0,
        mean_r_cov: 0.0,
        mean_r_top1: 0.0,
        mean_r_ndcg: 0.0,
        mean_r_proposer: 0.0,
        mean_r_critic: 0.0,
        oracle_at_k: eval0.oracle_at_k,
        top1: eval0.top1,
        target_logit: proposer.target_logit,
        log_spread: proposer.log_spread,
        sharpness: critic.sharpness,
        blindness: critic.blindness,
    });

    for step in 1..=cfg.steps {
        let tasks: Vec<GroundingTask> = (0..cfg.tasks_per_step as u64)
            .map(|t| make_task(&cfg, step, t))
            .collect::<Result<_>>()?;
        let rollouts: Vec<GroupRollout> = tasks
            .par_iter()
            .enumerate()
            .map(|(t, task)| {
                rollout_group(
                    &proposer,
                    &critic,
                    task,
                    cfg.group_size,
                    &maturity,
                    &cfg.scoring,
                    &cfg.coverage,
                    (cfg.master_seed, step, t as u64),
                )
            })
            .collect::<Result<_>>()?;

        let stats = batch_stats(&rollouts);

        // gradients were taken at the step-start parameters, so applying the
        // per-group updates sequentially equals one accumulated step
        let mut next_proposer = proposer;
        let mut next_critic = critic;
        for rollout in &rollouts {
            let (kept, _) = filter_groups(vec![rollout.proposer_group.clone()]);
            if let Some(group) = kept.first() {
                let advantages = group_advantages(group, &cfg.grpo)?;
                let grads: Vec<(f64, f64)> =
                    rollout.episodes.iter().map(|e| e.proposer_grad).collect();
                next_proposer =
                    update_proposer(&next_proposer, &grads, &advantages, cfg.learning_rate)?;
            }
            let (kept, _) = filter_groups(vec![rollout.critic_group.clone()]);
            if let Some(group) = kept.first() {
                let advantages = group_advantages(group, &cfg.grpo)?;
                let grads: Vec<(f64, f64)> =
                    rollout.episodes.iter().map(|e| e.critic_grad).collect();
                next_critic = update_critic(&next_critic, &grads, &advantages, cfg.learning_rate)?;
            }
        }

        maturity = maturity_update(maturity, stats.mean_r_acc, stats.mean_r_ndcg)?;
        proposer = next_proposer;
        critic = next_critic;

        let eval = evaluate_policies(&proposer, &critic, &eval_set, &cfg.scoring, cfg.master_seed)?;
        rows.push(LogRow {
            step,
            c_p: maturity.c_p,
            c_j: maturity.c_j,
            mean_r_acc: stats.mean_r_acc,
            mean_r_cov: stats.mean_r_cov,
            mean_r_top1: stats.mean_r_top1,
            mean_r_ndcg: stats.mean_r_ndcg,
            mean_r_proposer: stats.mean_r_proposer,
            mean_r_critic: stats.mean_r_critic,
            oracle_at_k: eval.oracle_at_k,
            top1: eval.top1,
            target_logit: proposer.target_logit,
            log_spread: proposer.log_spread,
            sharpness: critic.sharpness,
            blindness: critic.blindness,
        });
    }

    Ok(TrainingLog { rows, final_proposer: proposer, final_critic: critic })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> CoEvolutionConfig {
        CoEvolutionConfig {
            steps: 5,
            tasks_per_step: 3,
            group_size: 4,
            eval_tasks: 40,
            ..CoEvolutionConfig::default()
        }
    }

    #[test]
    fn zero_steps_logs_only_the_initial_eval() {
        let log = run_co_evolution(&CoEvolutionConfig { steps: 0, ..small_cfg() }).unwrap();
        assert_eq!(log.rows.len(), 1);
        assert_eq!(log.rows[0].step, 0);
        assert_eq!(log.rows[0].c_p, 0.0);
        assert_eq!(log.rows[0].c_j, 0.0);
    }

    #[test]
    fn same_seed_reproduces_the_log() {
        let a = run_co_evolution(&small_cfg()).unwrap();
        let b = run_co_evolution(&small_cfg()).unwrap();
        assert_eq!(
            serde_json::to_string(&a.rows).unwrap(),
            serde_json::to_string(&b.rows).unwrap()
        );
        assert_eq!(a.final_proposer, b.final_proposer);
        assert_eq!(a.final_critic, b.final_critic);
        let c = run_co_evolution(&CoEvolutionConfig { master_seed: 1, ..small_cfg() }).unwrap();
        assert_ne!(
            serde_json::to_string(&a.rows).unwrap(),
            serde_json::to_string(&c.rows).unwrap()
        );
    }

    #[test]
    fn parallel_and_serial_runs_match() {
        let baseline = run_co_evolution(&small_cfg()).unwrap();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_co_evolution(&small_cfg()))
            .unwrap();
        assert_eq!(
            serde_json::to_string(&baseline.rows).unwrap(),
            serde_json::to_string(&single.rows).unwrap()
        );
    }

    #[test]
    fn constant_saturated_rewards_reproduce_the_ema_closed_form() {
        // a frozen, perfect proposer saturates r_acc above 1 (clamped) and an
        // oracle critic pins r_ndcg at 1, so both maturities follow
        // 1 - (1-alpha)^t exactly. The spread is tiny enough (1e-8) that all
        // candidate scores agree to ~1e-12; even when the ranker flips such
        // near-ties, NDCG stays within ~1e-12 of 1, far inside the tolerance.
        let alpha = 0.1;
        let cfg = CoEvolutionConfig {
            steps: 50,
            tasks_per_step: 2,
            group_size: 4,
            eval_tasks: 10,
            learning_rate: 1e-12,
            alpha,
            proposer_init: ProposerPolicy { target_logit: 20.0, log_spread: (1e-8f64).ln(), k: 5 },
            critic_init: CriticPolicy { sharpness: 1e6, blindness: 0.0 },
            ..CoEvolutionConfig::default()
        };
        let log = run_co_evolution(&cfg).unwrap();
        for row in &log.rows[1..] {
            let expect = 1.0 - (1.0 - alpha).powi(row.step as i32);
            assert!(
                (row.c_p - expect).abs() < 1e-9,
                "c_p {} vs closed form {expect} at step {}",
                row.c_p,
                row.step
            );
            assert!((row.c_j - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn coverage_term_is_gated_off_at_zero_critic_maturity() {
        let cfg = small_cfg();
        let task = make_task(&cfg, 1, 0).unwrap();
        let maturity = MaturityState::new(cfg.alpha).unwrap();
        for log_spread in [-4.0, -3.0, -2.0, -1.0] {
            let proposer = ProposerPolicy { log_spread, ..cfg.proposer_init };
            let rollout = rollout_group(
                &proposer,
                &cfg.critic_init,
                &task,
                cfg.group_size,
                &maturity,
                &cfg.scoring,
                &cfg.coverage,
                (cfg.master_seed, 1, 0),
            )
            .unwrap();
            for e in &rollout.episodes {
                assert_eq!(e.weighted.r_proposer, e.breakdown.r_acc);
                assert!(e.breakdown.r_cov > 0.0);
            }
        }
    }

    #[test]
    fn oracle_critic_top1_equals_oracle_hit_per_episode() {
        // tight spreads put every candidate essentially on an element center,
        // where max-score and in-box coincide
        let cfg = CoEvolutionConfig {
            proposer_init: ProposerPolicy { target_logit: 0.0, log_spread: (1e-3f64).ln(), k: 5 },
            critic_init: CriticPolicy { sharpness: 1e6, blindness: 0.0 },
            ..small_cfg()
        };
        let maturity = MaturityState::new(cfg.alpha).unwrap();
        for t in 0..20u64 {
            let task = make_task(&cfg, 1, t).unwrap();
            let rollout = rollout_group(
                &cfg.proposer_init,
                &cfg.critic_init,
                &task,
                cfg.group_size,
                &maturity,
                &cfg.scoring,
                &cfg.coverage,
                (cfg.master_seed, 1, t),
            )
            .unwrap();
            for e in &rollout.episodes {
                assert_eq!(e.top1_hit, e.oracle_hit);
            }
        }
    }

    #[test]
    fn eval_draws_are_frozen_across_calls() {
        let cfg = small_cfg();
        let tasks = build_eval_tasks(&cfg).unwrap();
        let a = evaluate_policies(
            &cfg.proposer_init,
            &cfg.critic_init,
            &tasks,
            &cfg.scoring,
            cfg.master_seed,
        )
        .unwrap();
        let b = evaluate_policies(
            &cfg.proposer_init,
            &cfg.critic_init,
            &tasks,
            &cfg.scoring,
            cfg.master_seed,
        )
        .unwrap();
        assert_eq!(
            serde_json::to_string(&a.predictions).unwrap(),
            serde_json::to_string(&b.predictions).unwrap()
        );
    }

    #[test]
    fn log_is_well_formed() {
        let log = run_co_evolution(&small_cfg()).unwrap();
        assert_eq!(log.rows.len(), 6);
        for (i, row) in log.rows.iter().enumerate() {
            assert_eq!(row.step, i as u64);
            assert!((0.0..=1.0).contains(&row.c_p));
            assert!((0.0..=1.0).contains(&row.c_j));
            assert!((0.0..=1.0).contains(&row.oracle_at_k));
            assert!((0.0..=1.0).contains(&row.top1));
            assert!(row.top1 <= row.oracle_at_k + 1e-12);
            assert!(row.sharpness > 0.0);
            assert!(row.blindness >= 0.0);
        }
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        assert!(CoEvolutionConfig { group_size: 1, ..small_cfg() }.validated().is_err());
        assert!(CoEvolutionConfig { tasks_per_step: 0, ..small_cfg() }.validated().is_err());
        assert!(CoEvolutionConfig { learning_rate: 0.0, ..small_cfg() }.validated().is_err());
        assert!(CoEvolutionConfig { eval_tasks: 0, ..small_cfg() }.validated().is_err());
        assert!(CoEvolutionConfig { alpha: 0.0, ..small_cfg() }.validated().is_err());
        assert!(small_cfg().validated().is_ok());
    }
}
