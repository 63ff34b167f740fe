//! Canonical geometry, task, and scoring primitives.
//!
//! All coordinates are stored normalized to `[0,1]²`; pixel conversion is
//! confined to [`to_normalized`] / [`to_pixels`]. Every type here is an
//! immutable value and every operation is pure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in normalized screen coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Clamp into the unit square. Used at I/O boundaries and after
    /// sampling; internal arithmetic tolerates out-of-range points.
    pub fn clamped(self) -> Self {
        Self {
            x: self.x.clamp(0.0, 1.0),
            y: self.y.clamp(0.0, 1.0),
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Euclidean (L2) distance between two points.
pub fn euclidean_distance(p: Point2, q: Point2) -> f64 {
    ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt()
}

/// An axis-aligned box in normalized coordinates with positive area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BBox {
    /// Validating constructor: `min < max` on both axes, contained in `[0,1]²`.
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let b = Self::new_unchecked(x_min, y_min, x_max, y_max);
        if !b.is_valid() {
            return Err(Error::Argument(format!(
                "invalid bbox [{x_min}, {y_min}, {x_max}, {y_max}]"
            )));
        }
        Ok(b)
    }

    /// Bypass validation. Needed by the data-filtering pipeline, which must
    /// be able to inspect malformed boxes instead of refusing to parse them.
    pub const fn new_unchecked(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Self { x_min, y_min, x_max, y_max }
    }

    pub fn is_valid(&self) -> bool {
        let coords = [self.x_min, self.y_min, self.x_max, self.y_max];
        coords.iter().all(|c| c.is_finite() && (0.0..=1.0).contains(c))
            && self.x_min < self.x_max
            && self.y_min < self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point2 {
        Point2::new(
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        )
    }
}

/// Pixel dimensions of a screen; owns pixel/normalized conversion context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScreenGeometry {
    pub width_px: u32,
    pub height_px: u32,
}

impl ScreenGeometry {
    pub fn new(width_px: u32, height_px: u32) -> Result<Self> {
        if width_px == 0 || height_px == 0 {
            return Err(Error::Argument(format!(
                "screen dimensions must be >= 1, got {width_px}x{height_px}"
            )));
        }
        Ok(Self { width_px, height_px })
    }
}

/// Pixel coordinates to normalized. Pixel input must lie within
/// `[0, width] x [0, height]` (edge coordinates, not indices).
pub fn to_normalized(px: (i64, i64), screen: ScreenGeometry) -> Result<Point2> {
    let (x, y) = px;
    if x < 0 || y < 0 || x > i64::from(screen.width_px) || y > i64::from(screen.height_px) {
        return Err(Error::Viewport {
            x,
            y,
            width: screen.width_px,
            height: screen.height_px,
        });
    }
    Ok(Point2::new(
        x as f64 / f64::from(screen.width_px),
        y as f64 / f64::from(screen.height_px),
    ))
}

/// Normalized to pixel coordinates, rounding half up on each axis.
pub fn to_pixels(p: Point2, screen: ScreenGeometry) -> (i64, i64) {
    let round_half_up = |v: f64| (v + 0.5).floor() as i64;
    (
        round_half_up(p.x * f64::from(screen.width_px)),
        round_half_up(p.y * f64::from(screen.height_px)),
    )
}

/// One grounding task: a screen, a ground-truth target box, distractor
/// element boxes, and the (uninterpreted) instruction text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundingTask {
    pub task_id: String,
    pub screen: ScreenGeometry,
    pub target: BBox,
    pub distractors: Vec<BBox>,
    pub instruction: String,
}

impl GroundingTask {
    /// Distractors may overlap each other but none may equal the target.
    pub fn new(
        task_id: impl Into<String>,
        screen: ScreenGeometry,
        target: BBox,
        distractors: Vec<BBox>,
        instruction: impl Into<String>,
    ) -> Result<Self> {
        if distractors.iter().any(|d| d == &target) {
            return Err(Error::Argument(
                "a distractor box equals the target box".into(),
            ));
        }
        Ok(Self {
            task_id: task_id.into(),
            screen,
            target,
            distractors,
            instruction: instruction.into(),
        })
    }
}

/// The K candidate points of a single proposer pass. Index order is stable
/// and is the identity referenced by rankings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    points: Vec<Point2>,
}

impl CandidateSet {
    pub fn new(points: Vec<Point2>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySet);
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn k(&self) -> usize {
        self.points.len()
    }
}

/// How the Gaussian kernel width is resolved per task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    /// Half the ground-truth box width.
    HalfTargetWidth,
    /// A task-independent constant, for unit-testing the kernel in isolation.
    Fixed,
}

/// Scoring knobs shared by rewards and metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringConfig {
    pub sigma_mode: SigmaMode,
    pub sigma_fixed: f64,
    pub hit_constant: f64,
    pub boundary_inclusive: bool,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self {
            sigma_mode: SigmaMode::HalfTargetWidth,
            sigma_fixed: 0.05,
            hit_constant: 1.0,
            boundary_inclusive: true,
        }
    }
}

impl ScoringConfig {
    pub fn validated(self) -> Result<Self> {
        if self.sigma_fixed <= 0.0 || !self.sigma_fixed.is_finite() {
            return Err(Error::Argument(format!(
                "sigma_fixed must be positive, got {}",
                self.sigma_fixed
            )));
        }
        if self.hit_constant < 0.0 || !self.hit_constant.is_finite() {
            return Err(Error::Argument(format!(
                "hit_constant must be nonnegative, got {}",
                self.hit_constant
            )));
        }
        Ok(self)
    }

    /// The kernel width for a task. Positive by the BBox invariant
    /// (`HalfTargetWidth`) or by construction (`Fixed`).
    pub fn sigma(&self, task: &GroundingTask) -> f64 {
        match self.sigma_mode {
            SigmaMode::HalfTargetWidth => 0.5 * task.target.width(),
            SigmaMode::Fixed => self.sigma_fixed,
        }
    }
}

/// Gaussian quality score of a point against the task's target center:
/// `exp(-d² / 2σ²)`, in `(0, 1]`, equal to 1 exactly at the center.
pub fn gaussian_score(p: Point2, task: &GroundingTask, cfg: &ScoringConfig) -> f64 {
    let sigma = cfg.sigma(task);
    let d = euclidean_distance(p, task.target.center());
    (-d * d / (2.0 * sigma * sigma)).exp()
}

/// Whether a point falls within a box. Boundary points count as hits when
/// `boundary_inclusive` is set (the default).
pub fn hit(p: Point2, bbox: &BBox, cfg: &ScoringConfig) -> bool {
    if cfg.boundary_inclusive {
        p.x >= bbox.x_min && p.x <= bbox.x_max && p.y >= bbox.y_min && p.y <= bbox.y_max
    } else {
        p.x > bbox.x_min && p.x < bbox.x_max && p.y > bbox.y_min && p.y < bbox.y_max
    }
}
