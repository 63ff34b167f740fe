//! Core library for a desk-scale proposer/critic co-evolution toolkit for
//! GUI grounding: reward calculus, maturity-gated weighting, group-relative
//! advantage machinery, spatial aggregation baselines, grounding metrics, a
//! deterministic synthetic screen environment with small parametric policies,
//! and a marker renderer.

pub mod aggregation;
pub mod error;
pub mod evalkit;
pub mod grpo;
pub mod io;
pub mod maturity;
pub mod model;
pub mod render;
pub mod rewards;
pub mod simenv;

pub use error::{Error, Result};
pub use model::{
    euclidean_distance, gaussian_score, hit, to_normalized, to_pixels, BBox, CandidateSet,
    GroundingTask, Point2, ScoringConfig, ScreenGeometry, SigmaMode,
};
pub use rewards::{
    compute_breakdown, critic_ndcg_reward, critic_top1_reward, proposer_accuracy_reward,
    proposer_coverage_reward, CovNormalization, CoverageConfig, RankedList, RewardBreakdown,
};
pub use maturity::{update as maturity_update, weighted_rewards, MaturityState, WeightedRewards};
pub use aggregation::{
    aggregate_runs, arithmetic_mean, coordinate_median, distance_sum, geometric_median, medoid,
    AggregationKind, AggregationStrategy, GeoMedian,
};
pub use grpo::{
    clipped_surrogate_term, filter_groups, group_advantages, low_var_kl, objective_value,
    DropReason, GrpoConfig, RolloutGroup, StdMode, TrajectoryRecord,
};
pub use simenv::{
    generate_screen, run_co_evolution, CoEvolutionConfig, CriticPolicy, ProposerPolicy,
    RngStream, ScreenSpec, TrainingLog,
};
pub use evalkit::{
    delta_gap, difficulty_preselect, oracle_at_k, pass_at_k, semantic_verify, static_filter,
    top1_accuracy, AcceptAll, FilterConfig, FilterDecision, PredictionRecord, SemanticVerifier,
};
pub use render::{render_marked, write_ppm, Background, MarkedImage, RenderStyle};
