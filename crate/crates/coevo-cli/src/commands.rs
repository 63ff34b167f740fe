//! One function per subcommand. Each reads JSONL/key=value inputs, calls the
//! library, and writes its artifacts atomically into the output directory.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use coevo_core::evalkit::{
    self, difficulty_preselect, static_filter, FilterDecision, PredictionRecord,
};
use coevo_core::grpo::{filter_groups, group_advantages, objective_value};
use coevo_core::io::{
    parse_jsonl, to_jsonl, training_log_csv, AggregateInputRecord, AggregateOutputRecord,
    GroupRecord, GrpoReportRecord, PredRecord, RejectRecord, TaskRecord,
};
use coevo_core::model::{hit, CandidateSet, GroundingTask};
use coevo_core::render::{ppm_bytes, render_marked, RenderStyle};
use coevo_core::rewards::compute_breakdown;
use coevo_core::simenv::{build_eval_tasks, evaluate_policies, run_co_evolution};
use coevo_core::{aggregate_runs, delta_gap};

use crate::config::RunConfig;
use crate::output::{ensure_dir, out_path, read_text, write_atomic};
use crate::CliError;

fn read_records<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let text = read_text(path)?;
    parse_jsonl(&text).map_err(CliError::data_from)
}

fn load_tasks(path: &Path) -> Result<Vec<TaskRecord>, CliError> {
    read_records(path)
}

/// Index checked tasks by id; geometry errors surface as data errors.
fn task_index(records: &[TaskRecord]) -> Result<HashMap<String, GroundingTask>, CliError> {
    records
        .iter()
        .map(|r| Ok((r.task_id.clone(), r.to_task().map_err(CliError::data_from)?)))
        .collect()
}

fn lookup<'a>(
    index: &'a HashMap<String, GroundingTask>,
    task_id: &str,
) -> Result<&'a GroundingTask, CliError> {
    index
        .get(task_id)
        .ok_or_else(|| CliError::data(format!("prediction references unknown task {task_id:?}")))
}

/// Runs the co-evolution loop and writes the training log, the final policy
/// snapshot, and the held-out tasks with the final policies' predictions.
pub fn cmd_simulate(cfg: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    ensure_dir(out_dir)?;
    let log = run_co_evolution(&cfg.coevo).map_err(CliError::data_from)?;

    let eval_set = build_eval_tasks(&cfg.coevo).map_err(CliError::data_from)?;
    let outcome = evaluate_policies(
        &log.final_proposer,
        &log.final_critic,
        &eval_set,
        &cfg.coevo.scoring,
        cfg.coevo.master_seed,
    )
    .map_err(CliError::data_from)?;

    let tasks: Vec<TaskRecord> = eval_set.iter().map(TaskRecord::from_task).collect();
    let preds: Vec<PredRecord> = outcome
        .predictions
        .iter()
        .map(|p| PredRecord {
            task_id: p.task_id.clone(),
            points: p.points.iter().map(|q| [q.x, q.y]).collect(),
            ranking: Some(p.ranking.clone()),
        })
        .collect();

    #[derive(Serialize)]
    struct PolicySnapshot<'a> {
        proposer: &'a coevo_core::simenv::ProposerPolicy,
        critic: &'a coevo_core::simenv::CriticPolicy,
    }
    let snapshot = PolicySnapshot { proposer: &log.final_proposer, critic: &log.final_critic };

    write_atomic(&out_path(out_dir, "training_log.csv"), training_log_csv(&log).as_bytes())?;
    write_atomic(
        &out_path(out_dir, "policy.json"),
        serde_json::to_string(&snapshot).map_err(CliError::data_from)?.as_bytes(),
    )?;
    write_atomic(
        &out_path(out_dir, "eval_tasks.jsonl"),
        to_jsonl(&tasks).map_err(CliError::data_from)?.as_bytes(),
    )?;
    write_atomic(
        &out_path(out_dir, "eval_preds.jsonl"),
        to_jsonl(&preds).map_err(CliError::data_from)?.as_bytes(),
    )?;
    Ok(())
}

/// Scores predictions against tasks and writes a `metric,value,n` report.
/// Top-1 and the gap are reported only when every record carries a ranking.
pub fn cmd_eval(
    cfg: &RunConfig,
    tasks_path: &Path,
    preds_path: &Path,
    k: Option<usize>,
    out_dir: &Path,
) -> Result<(), CliError> {
    let k = k.unwrap_or(cfg.eval_k);
    if k == 0 {
        return Err(CliError::usage("k must be positive"));
    }
    let index = task_index(&load_tasks(tasks_path)?)?;
    let preds: Vec<PredRecord> = read_records(preds_path)?;
    if preds.is_empty() {
        return Err(CliError::data(format!("{} holds no predictions", preds_path.display())));
    }

    let mut oracle_hits = 0usize;
    let mut top1_hits = 0usize;
    let mut all_ranked = true;
    for record in &preds {
        let task = lookup(&index, &record.task_id)?;
        let ranking = record.ranking().map_err(CliError::data_from)?;
        let pred = PredictionRecord::new(record.task_id.clone(), record.points(), ranking)
            .map_err(CliError::data_from)?;
        if evalkit::oracle_at_k(&pred, task, &cfg.coevo.scoring, k) {
            oracle_hits += 1;
        }
        match pred.ranking {
            Some(_) => {
                if evalkit::top1_accuracy(&pred, task, &cfg.coevo.scoring)
                    .map_err(CliError::data_from)?
                {
                    top1_hits += 1;
                }
            }
            None => all_ranked = false,
        }
    }

    let n = preds.len();
    let oracle_rate = oracle_hits as f64 / n as f64;
    let mut report = String::from("metric,value,n\n");
    report.push_str(&format!("oracle_at_{k},{oracle_rate},{n}\n"));
    if all_ranked {
        let top1_rate = top1_hits as f64 / n as f64;
        report.push_str(&format!("top1,{top1_rate},{n}\n"));
        report.push_str(&format!("delta_gap,{},{n}\n", delta_gap(oracle_rate, top1_rate)));
    }
    ensure_dir(out_dir)?;
    write_atomic(&out_path(out_dir, "eval_report.csv"), report.as_bytes())
}

/// Collapses each task's repeated run predictions to one consensus point and
/// scores it against the ground-truth box.
pub fn cmd_aggregate(
    cfg: &RunConfig,
    runs_path: &Path,
    tasks_path: &Path,
    strategy_name: Option<&str>,
    out_dir: &Path,
) -> Result<(), CliError> {
    let mut strategy = cfg.aggregation.clone();
    if let Some(name) = strategy_name {
        strategy.kind =
            coevo_core::aggregation::AggregationKind::parse(name).map_err(CliError::usage_from)?;
    }
    let index = task_index(&load_tasks(tasks_path)?)?;
    let runs: Vec<AggregateInputRecord> = read_records(runs_path)?;

    let mut out = Vec::with_capacity(runs.len());
    for record in &runs {
        let task = lookup(&index, &record.task_id)?;
        let point = aggregate_runs(&record.points(), &strategy).map_err(CliError::data_from)?;
        out.push(AggregateOutputRecord {
            task_id: record.task_id.clone(),
            strategy: strategy.kind.name().to_string(),
            point: [point.x, point.y],
            hit: hit(point, &task.target, &cfg.coevo.scoring),
        });
    }
    ensure_dir(out_dir)?;
    write_atomic(
        &out_path(out_dir, "aggregate.jsonl"),
        to_jsonl(&out).map_err(CliError::data_from)?.as_bytes(),
    )
}

#[derive(Debug, Deserialize)]
struct RewardInput {
    task: TaskRecord,
    points: Vec<[f64; 2]>,
    #[serde(default)]
    ranking: Option<Vec<usize>>,
}

/// Emits the full reward breakdown for each (task, candidates, ranking) line.
pub fn cmd_reward(cfg: &RunConfig, input_path: &Path, out_dir: &Path) -> Result<(), CliError> {
    let inputs: Vec<RewardInput> = read_records(input_path)?;
    let mut lines = Vec::with_capacity(inputs.len());
    for input in &inputs {
        let task = input.task.to_task().map_err(CliError::data_from)?;
        let cands = CandidateSet::new(
            input.points.iter().map(|&[x, y]| coevo_core::Point2::new(x, y)).collect(),
        )
        .map_err(CliError::data_from)?;
        let ranking = input
            .ranking
            .clone()
            .map(coevo_core::RankedList::new)
            .transpose()
            .map_err(CliError::data_from)?;
        let breakdown = compute_breakdown(
            &cands,
            &task,
            ranking.as_ref(),
            &cfg.coevo.scoring,
            &cfg.coevo.coverage,
        )
        .map_err(CliError::data_from)?;
        lines.push(breakdown);
    }
    ensure_dir(out_dir)?;
    write_atomic(
        &out_path(out_dir, "rewards.jsonl"),
        to_jsonl(&lines).map_err(CliError::data_from)?.as_bytes(),
    )
}

#[derive(Debug, Deserialize)]
struct OutcomeRecord {
    task_id: String,
    hits: Vec<bool>,
}

/// Static geometry screen plus, when rollout outcomes are supplied, the
/// difficulty preselection; writes kept tasks and rejections with reasons.
pub fn cmd_filter(
    cfg: &RunConfig,
    tasks_path: &Path,
    outcomes_path: Option<&Path>,
    out_dir: &Path,
) -> Result<(), CliError> {
    let records = load_tasks(tasks_path)?;
    let outcomes: HashMap<String, Vec<bool>> = match outcomes_path {
        Some(path) => read_records::<OutcomeRecord>(path)?
            .into_iter()
            .map(|r| (r.task_id, r.hits))
            .collect(),
        None => HashMap::new(),
    };

    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for record in &records {
        // unchecked view: malformed geometry must reach the filter, not error out
        let task = record.to_task_unchecked();
        let decision = match static_filter(&task, &cfg.filter) {
            FilterDecision::Keep => match outcomes.get(&record.task_id) {
                Some(hits) => difficulty_preselect(hits).map_err(CliError::data_from)?,
                None => FilterDecision::Keep,
            },
            reject => reject,
        };
        match decision {
            FilterDecision::Keep => kept.push(record.clone()),
            FilterDecision::Reject(reason) => rejected.push(RejectRecord {
                task_id: record.task_id.clone(),
                reason: reason.name().to_string(),
            }),
        }
    }
    ensure_dir(out_dir)?;
    write_atomic(
        &out_path(out_dir, "kept.jsonl"),
        to_jsonl(&kept).map_err(CliError::data_from)?.as_bytes(),
    )?;
    write_atomic(
        &out_path(out_dir, "rejected.jsonl"),
        to_jsonl(&rejected).map_err(CliError::data_from)?.as_bytes(),
    )
}

/// Rasterizes each task that has a candidate record into `<task_id>.ppm`
/// plus a `<task_id>.markers.json` sidecar.
pub fn cmd_render(
    cfg: &RunConfig,
    tasks_path: &Path,
    candidates_path: &Path,
    out_dir: &Path,
) -> Result<(), CliError> {
    let index = task_index(&load_tasks(tasks_path)?)?;
    let candidates: Vec<PredRecord> = read_records(candidates_path)?;
    let style = RenderStyle {
        marker_radius_px: cfg.marker_radius_px,
        background: cfg.background,
        ..RenderStyle::default()
    };
    ensure_dir(out_dir)?;
    for record in &candidates {
        let task = lookup(&index, &record.task_id)?;
        let cands = CandidateSet::new(record.points()).map_err(CliError::data_from)?;
        let image = render_marked(task, &cands, &style).map_err(CliError::data_from)?;
        write_atomic(&out_path(out_dir, &format!("{}.ppm", record.task_id)), &ppm_bytes(&image))?;
        write_atomic(
            &out_path(out_dir, &format!("{}.markers.json", record.task_id)),
            serde_json::to_string(&image.sidecar).map_err(CliError::data_from)?.as_bytes(),
        )?;
    }
    Ok(())
}

/// Applies the rollout-group filters and reports advantages and the surrogate
/// objective for every kept group, reasons for every dropped one.
pub fn cmd_grpo_check(cfg: &RunConfig, groups_path: &Path, out_dir: &Path) -> Result<(), CliError> {
    let records: Vec<GroupRecord> = read_records(groups_path)?;
    let mut report = Vec::with_capacity(records.len());
    for record in &records {
        let group = record.to_group().map_err(CliError::data_from)?;
        let (kept, dropped) = filter_groups(vec![group]);
        let row = match (kept.into_iter().next(), dropped.into_iter().next()) {
            (Some(group), _) => GrpoReportRecord {
                query_id: record.query_id.clone(),
                kept: true,
                reason: None,
                advantages: Some(
                    group_advantages(&group, &cfg.coevo.grpo).map_err(CliError::data_from)?,
                ),
                objective: Some(
                    objective_value(&group, &cfg.coevo.grpo).map_err(CliError::data_from)?,
                ),
            },
            (None, Some((_, reason))) => GrpoReportRecord {
                query_id: record.query_id.clone(),
                kept: false,
                reason: Some(reason.name().to_string()),
                advantages: None,
                objective: None,
            },
            (None, None) => unreachable!("filter_groups returns every group"),
        };
        report.push(row);
    }
    ensure_dir(out_dir)?;
    write_atomic(
        &out_path(out_dir, "grpo_report.jsonl"),
        to_jsonl(&report).map_err(CliError::data_from)?.as_bytes(),
    )
}
