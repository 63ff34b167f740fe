//! Deterministic synthetic screens: a grid of jittered element boxes with
//! one marked target, standing in for densely packed UI layouts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BBox, GroundingTask, ScreenGeometry};
use crate::simenv::rng::RngStream;

/// Fraction of a grid cell an unjittered element occupies per axis.
const ELEMENT_CELL_FRACTION: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreenSpec {
    pub grid_cols: u32,
    pub grid_rows: u32,
    /// Fraction of grid cells that hold an element, in (0, 1].
    pub element_fill: f64,
    /// Cell index of the target, row-major in 0..cols*rows.
    pub target_cell: u32,
    /// Relative size noise in [0, 0.5).
    pub element_size_jitter: f64,
    pub seed: u64,
    #[serde(default = "default_width_px")]
    pub width_px: u32,
    #[serde(default = "default_height_px")]
    pub height_px: u32,
}

fn default_width_px() -> u32 {
    1920
}

fn default_height_px() -> u32 {
    1080
}

impl ScreenSpec {
    pub fn cell_count(&self) -> u32 {
        self.grid_cols * self.grid_rows
    }

    pub fn validated(self) -> Result<Self> {
        if self.grid_cols == 0 || self.grid_rows == 0 {
            return Err(Error::Spec("grid dimensions must be positive".into()));
        }
        if !(self.element_fill > 0.0 && self.element_fill <= 1.0) {
            return Err(Error::Spec(format!(
                "element_fill must lie in (0, 1], got {}",
                self.element_fill
            )));
        }
        if self.target_cell >= self.cell_count() {
            return Err(Error::Spec(format!(
                "target_cell {} out of range for a {}x{} grid",
                self.target_cell, self.grid_cols, self.grid_rows
            )));
        }
        if !(0.0..0.5).contains(&self.element_size_jitter) {
            return Err(Error::Spec(format!(
                "element_size_jitter must lie in [0, 0.5), got {}",
                self.element_size_jitter
            )));
        }
        if self.width_px == 0 || self.height_px == 0 {
            return Err(Error::Spec("screen pixel dimensions must be positive".into()));
        }
        let elements = (self.element_fill * self.cell_count() as f64).round() as usize;
        if elements == 0 {
            return Err(Error::Spec(format!(
                "element_fill {} leaves a {}x{} grid empty",
                self.element_fill, self.grid_cols, self.grid_rows
            )));
        }
        Ok(self)
    }
}

fn cell_box(spec: &ScreenSpec, cell: u32, rng: &mut RngStream) -> BBox {
    let col = (cell % spec.grid_cols) as f64;
    let row = (cell / spec.grid_cols) as f64;
    let cell_w = 1.0 / spec.grid_cols as f64;
    let cell_h = 1.0 / spec.grid_rows as f64;
    let cx = (col + 0.5) * cell_w;
    let cy = (row + 0.5) * cell_h;
    // size jitter is symmetric and per-axis; boxes are clipped to the viewport
    let jx = 1.0 + spec.element_size_jitter * (2.0 * rng.next_f64() - 1.0);
    let jy = 1.0 + spec.element_size_jitter * (2.0 * rng.next_f64() - 1.0);
    let half_w = 0.5 * ELEMENT_CELL_FRACTION * cell_w * jx;
    let half_h = 0.5 * ELEMENT_CELL_FRACTION * cell_h * jy;
    BBox::new(
        (cx - half_w).max(0.0),
        (cy - half_h).max(0.0),
        (cx + half_w).min(1.0),
        (cy + half_h).min(1.0),
    )
    .expect("cell centers are interior, so clipped boxes stay valid")
}

/// Builds the task for a screen spec: occupied cells are the target plus a
/// seeded sample of other cells, each carrying one jittered element box.
pub fn generate_screen(spec: &ScreenSpec) -> Result<GroundingTask> {
    let spec = spec.validated()?;
    let cells = spec.cell_count();
    let elements = (spec.element_fill * cells as f64).round() as usize;
    let mut rng = RngStream::from_seed(spec.seed);

    // partial Fisher-Yates over the non-target cells
    let mut others: Vec<u32> = (0..cells).filter(|&c| c != spec.target_cell).collect();
    let extra = elements - 1;
    for i in 0..extra.min(others.len()) {
        let j = i + (rng.next_u64() % (others.len() - i) as u64) as usize;
        others.swap(i, j);
    }
    let mut occupied: Vec<u32> = others.into_iter().take(extra).collect();
    occupied.push(spec.target_cell);
    occupied.sort_unstable();

    // box jitter draws happen in cell order so occupancy and geometry are
    // both functions of the seed alone
    let mut target = None;
    let mut distractors = Vec::with_capacity(occupied.len() - 1);
    for &cell in &occupied {
        let bbox = cell_box(&spec, cell, &mut rng);
        if cell == spec.target_cell {
            target = Some(bbox);
        } else {
            distractors.push(bbox);
        }
    }
    let target = target.expect("target cell is always occupied");

    let row = spec.target_cell / spec.grid_cols;
    let col = spec.target_cell % spec.grid_cols;
    GroundingTask::new(
        format!("screen-{:016x}-{}", spec.seed, spec.target_cell),
        ScreenGeometry::new(spec.width_px, spec.height_px)?,
        target,
        distractors,
        format!("click the element at row {row}, column {col}"),
    )
}
