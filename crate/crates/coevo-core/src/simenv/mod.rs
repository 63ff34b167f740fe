//! Synthetic co-evolution environment: deterministic screens, parametric
//! proposer/critic policies, and the training loop that couples them.

mod policy;
mod rng;
mod screen;
mod trainer;

pub use policy::{
    critic_log_density, critic_log_density_grad, critic_rank, proposer_log_density,
    proposer_log_density_grad, sample_candidates, update_critic, update_proposer, CriticPolicy,
    CriticSample, ProposalSample, ProposerPolicy,
};
pub use rng::RngStream;
pub use screen::{generate_screen, ScreenSpec};
pub use trainer::{
    build_eval_tasks, evaluate_policies, rollout_group, run_co_evolution, CoEvolutionConfig,
    EpisodeMetrics, EvalOutcome, EvalPrediction, GroupRollout, LogRow, ScreenTemplate,
    TrainingLog,
};
