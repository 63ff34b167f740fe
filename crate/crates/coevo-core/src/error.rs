//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Pixel coordinates outside the viewport.
    #[error("pixel coordinate ({x}, {y}) outside viewport {width}x{height}")]
    Viewport { x: i64, y: i64, width: u32, height: u32 },

    /// Mismatched or structurally invalid inputs (e.g. a ranking that is not
    /// a permutation of the score indices).
    #[error("shape error: {0}")]
    Shape(String),

    /// Non-finite value fed to a scalar update.
    #[error("non-finite signal: {0}")]
    Signal(String),

    /// An estimator was handed an empty point set.
    #[error("empty point set")]
    EmptySet,

    /// Advantage normalization needs at least two trajectories.
    #[error("rollout group has {0} records, need at least 2")]
    GroupSize(usize),

    /// Probability ratios must be strictly positive.
    #[error("non-positive probability ratio: {0}")]
    Ratio(f64),

    /// Screen specification cannot produce a valid task.
    #[error("invalid screen spec: {0}")]
    Spec(String),

    /// Policy gradient evaluated to a non-finite value.
    #[error("non-finite gradient: {0}")]
    Gradient(String),

    /// A metric that needs a ranking was given predictions without one.
    #[error("prediction record has no ranking")]
    RankingRequired,

    /// Invalid scalar argument (bad range, bad enum value, ...).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// More candidates than palette colors.
    #[error("candidate count {count} exceeds palette size {palette}")]
    Palette { count: usize, palette: usize },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Malformed record in a JSONL stream.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
