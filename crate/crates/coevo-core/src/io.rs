//! File formats: JSONL record types for tasks, predictions, aggregation runs
//! and rollout groups, plus the training-log CSV layout. Parsing reports
//! 1-based line numbers; writing is plain string building so callers control
//! atomicity.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grpo::{RolloutGroup, TrajectoryRecord};
use crate::model::{BBox, GroundingTask, Point2, ScreenGeometry};
use crate::rewards::RankedList;
use crate::simenv::TrainingLog;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task_id: String,
    pub width_px: u32,
    pub height_px: u32,
    /// [x_min, y_min, x_max, y_max] in normalized coordinates.
    pub target: [f64; 4],
    pub distractors: Vec<[f64; 4]>,
    pub instruction: String,
}

impl TaskRecord {
    pub fn from_task(task: &GroundingTask) -> Self {
        let flat = |b: &BBox| [b.x_min, b.y_min, b.x_max, b.y_max];
        Self {
            task_id: task.task_id.clone(),
            width_px: task.screen.width_px,
            height_px: task.screen.height_px,
            target: flat(&task.target),
            distractors: task.distractors.iter().map(flat).collect(),
            instruction: task.instruction.clone(),
        }
    }

    /// Fully validated conversion; rejects malformed geometry.
    pub fn to_task(&self) -> Result<GroundingTask> {
        GroundingTask::new(
            self.task_id.clone(),
            ScreenGeometry::new(self.width_px, self.height_px)?,
            BBox::new(self.target[0], self.target[1], self.target[2], self.target[3])?,
            self.distractors
                .iter()
                .map(|d| BBox::new(d[0], d[1], d[2], d[3]))
                .collect::<Result<_>>()?,
            self.instruction.clone(),
        )
    }

    /// Geometry taken verbatim, for the filter pipeline which must be able to
    /// look at malformed boxes and reject them with a reason.
    pub fn to_task_unchecked(&self) -> GroundingTask {
        GroundingTask {
            task_id: self.task_id.clone(),
            screen: ScreenGeometry {
                width_px: self.width_px.max(1),
                height_px: self.height_px.max(1),
            },
            target: BBox::new_unchecked(
                self.target[0],
                self.target[1],
                self.target[2],
                self.target[3],
            ),
            distractors: self
                .distractors
                .iter()
                .map(|d| BBox::new_unchecked(d[0], d[1], d[2], d[3]))
                .collect(),
            instruction: self.instruction.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredRecord {
    pub task_id: String,
    pub points: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranking: Option<Vec<usize>>,
}

impl PredRecord {
    pub fn points(&self) -> Vec<Point2> {
        self.points.iter().map(|&[x, y]| Point2::new(x, y)).collect()
    }

    pub fn ranking(&self) -> Result<Option<RankedList>> {
        self.ranking.clone().map(RankedList::new).transpose()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateInputRecord {
    pub task_id: String,
    pub run_points: Vec<[f64; 2]>,
}

impl AggregateInputRecord {
    pub fn points(&self) -> Vec<Point2> {
        self.run_points.iter().map(|&[x, y]| Point2::new(x, y)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateOutputRecord {
    pub task_id: String,
    pub strategy: String,
    pub point: [f64; 2],
    pub hit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRecord {
    pub query_id: String,
    pub rewards: Vec<f64>,
    pub prob_ratios: Vec<f64>,
    pub ref_ratios: Vec<f64>,
    pub truncated: Vec<bool>,
}

impl GroupRecord {
    pub fn to_group(&self) -> Result<RolloutGroup> {
        let n = self.rewards.len();
        if self.prob_ratios.len() != n || self.ref_ratios.len() != n || self.truncated.len() != n {
            return Err(Error::Shape(format!(
                "group {} has ragged arrays: {} rewards, {} prob_ratios, {} ref_ratios, {} truncated",
                self.query_id,
                n,
                self.prob_ratios.len(),
                self.ref_ratios.len(),
                self.truncated.len()
            )));
        }
        let records = (0..n)
            .map(|i| {
                TrajectoryRecord::new(
                    self.rewards[i],
                    self.prob_ratios[i],
                    self.ref_ratios[i],
                    self.truncated[i],
                    1,
                )
            })
            .collect::<Result<_>>()?;
        Ok(RolloutGroup::new(self.query_id.clone(), records))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrpoReportRecord {
    pub query_id: String,
    pub kept: bool,
    pub reason: Option<String>,
    pub advantages: Option<Vec<f64>>,
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectRecord {
    pub task_id: String,
    pub reason: String,
}

/// Parses one JSON document per nonblank line; errors carry the 1-based line
/// number.
pub fn parse_jsonl<T: DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_jsonl(&text)
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).map_err(|e| Error::Parse {
            line: 0,
            message: e.to_string(),
        })?);
        out.push('\n');
    }
    Ok(out)
}

pub const TRAINING_LOG_HEADER: &str = "step,c_p,c_j,mean_r_acc,mean_r_cov,mean_r_top1,mean_r_ndcg,mean_r_proposer,mean_r_critic,oracle_at_k,top1,target_logit,log_spread,sharpness,blindness";

/// Training log as CSV; floats use Rust's shortest round-trip formatting so
/// repeated runs write identical bytes.
pub fn training_log_csv(log: &TrainingLog) -> String {
    let mut out = String::from(TRAINING_LOG_HEADER);
    out.push('\n');
    for r in &log.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.step,
            r.c_p,
            r.c_j,
            r.mean_r_acc,
            r.mean_r_cov,
            r.mean_r_top1,
            r.mean_r_ndcg,
            r.mean_r_proposer,
            r.mean_r_critic,
            r.oracle_at_k,
            r.top1,
            r.target_logit,
            r.log_spread,
            r.sharpness,
            r.blindness,
        ));
    }
    out
}
