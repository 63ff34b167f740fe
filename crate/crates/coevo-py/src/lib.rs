//! Python bindings for the coevo toolkit: reward calculus, maturity
//! weighting, group-relative advantages, spatial aggregation, grounding
//! metrics, data filtering, the synthetic co-evolution run, and the marker
//! renderer. Tasks are wrapped in a small `Task` class; everything else is
//! plain lists, dicts, and scalar values.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use coevo_core::aggregation::{AggregationKind, AggregationStrategy};
use coevo_core::evalkit::{FilterConfig, FilterDecision, PredictionRecord};
use coevo_core::grpo::{GrpoConfig, RolloutGroup, StdMode, TrajectoryRecord};
use coevo_core::maturity::MaturityState;
use coevo_core::model::{
    BBox, CandidateSet, GroundingTask, Point2, ScoringConfig, ScreenGeometry, SigmaMode,
};
use coevo_core::render::{ppm_bytes, render_marked, Background, RenderStyle};
use coevo_core::rewards::{CovNormalization, CoverageConfig, RankedList, RewardBreakdown};
use coevo_core::simenv::{CoEvolutionConfig, CriticPolicy, LogRow, ProposerPolicy};

fn verr(e: coevo_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn point(xy: [f64; 2]) -> Point2 {
    Point2::new(xy[0], xy[1])
}

fn candidate_set(points: Vec<[f64; 2]>) -> PyResult<CandidateSet> {
    CandidateSet::new(points.into_iter().map(point).collect()).map_err(verr)
}

fn ranked_list(order: Vec<usize>) -> PyResult<RankedList> {
    RankedList::new(order).map_err(verr)
}

fn bbox(coords: [f64; 4]) -> PyResult<BBox> {
    BBox::new(coords[0], coords[1], coords[2], coords[3]).map_err(verr)
}

fn parse_sigma_mode(name: &str) -> PyResult<SigmaMode> {
    match name {
        "half_target_width" => Ok(SigmaMode::HalfTargetWidth),
        "fixed" => Ok(SigmaMode::Fixed),
        other => Err(PyValueError::new_err(format!(
            "unknown sigma_mode {other:?} (expected half_target_width or fixed)"
        ))),
    }
}

fn scoring_from(dict: Option<&Bound<'_, PyDict>>) -> PyResult<ScoringConfig> {
    let mut cfg = ScoringConfig::default();
    if let Some(d) = dict {
        for (k, v) in d.iter() {
            let key: String = k.extract()?;
            match key.as_str() {
                "sigma_mode" => cfg.sigma_mode = parse_sigma_mode(&v.extract::<String>()?)?,
                "sigma_fixed" => cfg.sigma_fixed = v.extract()?,
                "hit_constant" => cfg.hit_constant = v.extract()?,
                "boundary_inclusive" => cfg.boundary_inclusive = v.extract()?,
                other => {
                    return Err(PyValueError::new_err(format!("unknown scoring key {other:?}")))
                }
            }
        }
    }
    cfg.validated().map_err(verr)
}

fn coverage_from(dict: Option<&Bound<'_, PyDict>>) -> PyResult<CoverageConfig> {
    let mut cfg = CoverageConfig::default();
    if let Some(d) = dict {
        for (k, v) in d.iter() {
            let key: String = k.extract()?;
            match key.as_str() {
                "epsilon" => cfg.epsilon = v.extract()?,
                "normalization" => {
                    cfg.normalization = match v.extract::<String>()?.as_str() {
                        "population" => CovNormalization::Population,
                        "sample" => CovNormalization::Sample,
                        other => {
                            return Err(PyValueError::new_err(format!(
                                "unknown normalization {other:?} (expected population or sample)"
                            )))
                        }
                    }
                }
                other => {
                    return Err(PyValueError::new_err(format!("unknown coverage key {other:?}")))
                }
            }
        }
    }
    cfg.validated().map_err(verr)
}

fn grpo_from(dict: Option<&Bound<'_, PyDict>>) -> PyResult<GrpoConfig> {
    let mut cfg = GrpoConfig::default();
    if let Some(d) = dict {
        for (k, v) in d.iter() {
            let key: String = k.extract()?;
            match key.as_str() {
                "clip_epsilon" => cfg.clip_epsilon = v.extract()?,
                "kl_beta" => cfg.kl_beta = v.extract()?,
                "adv_epsilon" => cfg.adv_epsilon = v.extract()?,
                "std_mode" => {
                    cfg.std_mode = match v.extract::<String>()?.as_str() {
                        "population" => StdMode::Population,
                        "sample" => StdMode::Sample,
                        other => {
                            return Err(PyValueError::new_err(format!(
                                "unknown std_mode {other:?} (expected population or sample)"
                            )))
                        }
                    }
                }
                other => return Err(PyValueError::new_err(format!("unknown grpo key {other:?}"))),
            }
        }
    }
    cfg.validated().map_err(verr)
}

/// A GUI grounding task: a screen, a ground-truth target box, and distractor
/// boxes, all in normalized [0, 1] coordinates.
#[pyclass(frozen, skip_from_py_object)]
struct Task {
    inner: GroundingTask,
}

#[pymethods]
impl Task {
    #[new]
    #[pyo3(signature = (target, distractors=Vec::new(), width_px=1920, height_px=1080, task_id=String::from("task"), instruction=String::new()))]
    fn new(
        target: [f64; 4],
        distractors: Vec<[f64; 4]>,
        width_px: u32,
        height_px: u32,
        task_id: String,
        instruction: String,
    ) -> PyResult<Self> {
        let screen = ScreenGeometry::new(width_px, height_px).map_err(verr)?;
        let target = bbox(target)?;
        let distractors = distractors.into_iter().map(bbox).collect::<PyResult<Vec<_>>>()?;
        let inner =
            GroundingTask::new(task_id, screen, target, distractors, instruction).map_err(verr)?;
        Ok(Self { inner })
    }

    #[getter]
    fn task_id(&self) -> &str {
        &self.inner.task_id
    }

    #[getter]
    fn target(&self) -> (f64, f64, f64, f64) {
        let b = self.inner.target;
        (b.x_min, b.y_min, b.x_max, b.y_max)
    }

    #[getter]
    fn distractors(&self) -> Vec<(f64, f64, f64, f64)> {
        self.inner.distractors.iter().map(|b| (b.x_min, b.y_min, b.x_max, b.y_max)).collect()
    }

    #[getter]
    fn width_px(&self) -> u32 {
        self.inner.screen.width_px
    }

    #[getter]
    fn height_px(&self) -> u32 {
        self.inner.screen.height_px
    }

    #[getter]
    fn instruction(&self) -> &str {
        &self.inner.instruction
    }

    fn __repr__(&self) -> String {
        let b = self.inner.target;
        format!(
            "Task(task_id={:?}, target=({}, {}, {}, {}), distractors={}, screen={}x{})",
            self.inner.task_id,
            b.x_min,
            b.y_min,
            b.x_max,
            b.y_max,
            self.inner.distractors.len(),
            self.inner.screen.width_px,
            self.inner.screen.height_px,
        )
    }
}

/// Gaussian closeness score of one point against the task's target box.
#[pyfunction]
#[pyo3(signature = (point_xy, task, scoring=None))]
fn gaussian_score(
    point_xy: [f64; 2],
    task: &Task,
    scoring: Option<&Bound<'_, PyDict>>,
) -> PyResult<f64> {
    let cfg = scoring_from(scoring)?;
    Ok(coevo_core::model::gaussian_score(point(point_xy), &task.inner, &cfg))
}

/// Whether a point lands inside a box, honoring the boundary convention.
#[pyfunction]
#[pyo3(signature = (point_xy, box_coords, scoring=None))]
fn hit(
    point_xy: [f64; 2],
    box_coords: [f64; 4],
    scoring: Option<&Bound<'_, PyDict>>,
) -> PyResult<bool> {
    let cfg = scoring_from(scoring)?;
    Ok(coevo_core::model::hit(point(point_xy), &bbox(box_coords)?, &cfg))
}

fn breakdown_dict<'py>(py: Python<'py>, b: &RewardBreakdown) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("scores", &b.scores)?;
    d.set_item("softmax_weights", &b.softmax_weights)?;
    d.set_item("weighted_score_term", b.weighted_score_term)?;
    d.set_item("hit_term", b.hit_term)?;
    d.set_item("r_acc", b.r_acc)?;
    d.set_item("r_cov", b.r_cov)?;
    d.set_item("r_top1", b.r_top1)?;
    d.set_item("r_ndcg", b.r_ndcg)?;
    d.set_item("degenerate_spread", b.degenerate_spread)?;
    Ok(d)
}

/// Every reward term for one episode: accuracy, coverage, and (when a
/// ranking is supplied) the top-1 and NDCG critic terms.
#[pyfunction]
#[pyo3(signature = (points, task, ranking=None, scoring=None, coverage=None))]
fn reward_breakdown<'py>(
    py: Python<'py>,
    points: Vec<[f64; 2]>,
    task: &Task,
    ranking: Option<Vec<usize>>,
    scoring: Option<&Bound<'_, PyDict>>,
    coverage: Option<&Bound<'_, PyDict>>,
) -> PyResult<Bound<'py, PyDict>> {
    let cands = candidate_set(points)?;
    let ranking = ranking.map(ranked_list).transpose()?;
    let b = coevo_core::rewards::compute_breakdown(
        &cands,
        &task.inner,
        ranking.as_ref(),
        &scoring_from(scoring)?,
        &coverage_from(coverage)?,
    )
    .map_err(verr)?;
    breakdown_dict(py, &b)
}

/// NDCG of a ranking against per-candidate relevance scores.
#[pyfunction]
fn ndcg(ranking: Vec<usize>, scores: Vec<f64>) -> PyResult<f64> {
    coevo_core::rewards::critic_ndcg_reward(&ranked_list(ranking)?, &scores).map_err(verr)
}

/// Relevance score of the top-ranked candidate.
#[pyfunction]
fn top1_score(ranking: Vec<usize>, scores: Vec<f64>) -> PyResult<f64> {
    coevo_core::rewards::critic_top1_reward(&ranked_list(ranking)?, &scores).map_err(verr)
}

/// Maturity-gated composite rewards from the four raw terms, using the
/// pre-update maturities `c_p` and `c_j`.
#[pyfunction]
fn maturity_weighted<'py>(
    py: Python<'py>,
    r_acc: f64,
    r_cov: f64,
    r_top1: f64,
    r_ndcg: f64,
    c_p: f64,
    c_j: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let state = MaturityState { c_p, c_j, alpha: 0.01, step: 0 };
    let breakdown = RewardBreakdown {
        scores: Vec::new(),
        softmax_weights: Vec::new(),
        weighted_score_term: 0.0,
        hit_term: 0.0,
        r_acc,
        r_cov,
        r_top1: Some(r_top1),
        r_ndcg: Some(r_ndcg),
        degenerate_spread: false,
    };
    let w = coevo_core::maturity::weighted_rewards(&state, &breakdown).map_err(verr)?;
    let d = PyDict::new(py);
    d.set_item("r_proposer", w.r_proposer)?;
    d.set_item("r_critic", w.r_critic)?;
    d.set_item("c_p_used", w.c_p_used)?;
    d.set_item("c_j_used", w.c_j_used)?;
    Ok(d)
}

/// One EMA step of both maturities over clamped batch-mean signals; returns
/// the updated `(c_p, c_j)`.
#[pyfunction]
#[pyo3(signature = (c_p, c_j, mean_r_acc, mean_r_ndcg, alpha=0.01))]
fn maturity_update(
    c_p: f64,
    c_j: f64,
    mean_r_acc: f64,
    mean_r_ndcg: f64,
    alpha: f64,
) -> PyResult<(f64, f64)> {
    let state = MaturityState::new(alpha).map_err(verr)?;
    let state = MaturityState { c_p, c_j, ..state };
    let next = coevo_core::maturity::update(state, mean_r_acc, mean_r_ndcg).map_err(verr)?;
    Ok((next.c_p, next.c_j))
}

fn build_group(query_id: String, rewards: &[f64], truncated: Option<&[bool]>) -> PyResult<RolloutGroup> {
    if let Some(t) = truncated {
        if t.len() != rewards.len() {
            return Err(PyValueError::new_err(format!(
                "{} truncated flags for {} rewards",
                t.len(),
                rewards.len()
            )));
        }
    }
    let records = rewards
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            TrajectoryRecord::new(r, 1.0, 1.0, truncated.map_or(false, |t| t[i]), 1).map_err(verr)
        })
        .collect::<PyResult<Vec<_>>>()?;
    Ok(RolloutGroup::new(query_id, records))
}

/// Group-relative advantages: (r - mean) / (std + eps) over one group.
#[pyfunction]
#[pyo3(signature = (rewards, grpo=None))]
fn group_advantages(rewards: Vec<f64>, grpo: Option<&Bound<'_, PyDict>>) -> PyResult<Vec<f64>> {
    let group = build_group("group".into(), &rewards, None)?;
    coevo_core::grpo::group_advantages(&group, &grpo_from(grpo)?).map_err(verr)
}

/// Clipped-surrogate objective of one group, with the optional low-variance
/// KL penalty. Ratios default to 1 (on-policy).
#[pyfunction]
#[pyo3(signature = (rewards, prob_ratios=None, ref_ratios=None, grpo=None))]
fn grpo_objective(
    rewards: Vec<f64>,
    prob_ratios: Option<Vec<f64>>,
    ref_ratios: Option<Vec<f64>>,
    grpo: Option<&Bound<'_, PyDict>>,
) -> PyResult<f64> {
    let n = rewards.len();
    let prob_ratios = prob_ratios.unwrap_or_else(|| vec![1.0; n]);
    let ref_ratios = ref_ratios.unwrap_or_else(|| vec![1.0; n]);
    if prob_ratios.len() != n || ref_ratios.len() != n {
        return Err(PyValueError::new_err(format!(
            "{} prob_ratios and {} ref_ratios for {n} rewards",
            prob_ratios.len(),
            ref_ratios.len()
        )));
    }
    let records = rewards
        .iter()
        .zip(&prob_ratios)
        .zip(&ref_ratios)
        .map(|((&r, &p), &q)| TrajectoryRecord::new(r, p, q, false, 1).map_err(verr))
        .collect::<PyResult<Vec<_>>>()?;
    let group = RolloutGroup::new("group", records);
    coevo_core::grpo::objective_value(&group, &grpo_from(grpo)?).map_err(verr)
}

/// Online data filters over rollout groups: strip truncated records, then
/// drop undersized and zero-advantage groups. Each input group is a dict
/// with `query_id`, `rewards`, and optional `truncated`. Returns
/// `(kept, dropped)` where kept groups carry their post-strip rewards and
/// dropped entries are `(query_id, reason)` pairs.
#[pyfunction]
fn filter_groups<'py>(
    py: Python<'py>,
    groups: Vec<Bound<'py, PyDict>>,
) -> PyResult<(Vec<Bound<'py, PyDict>>, Vec<(String, String)>)> {
    let mut parsed = Vec::with_capacity(groups.len());
    for g in &groups {
        let mut query_id = None;
        let mut rewards: Option<Vec<f64>> = None;
        let mut truncated: Option<Vec<bool>> = None;
        for (k, v) in g.iter() {
            match k.extract::<String>()?.as_str() {
                "query_id" => query_id = Some(v.extract::<String>()?),
                "rewards" => rewards = Some(v.extract()?),
                "truncated" => truncated = Some(v.extract()?),
                other => {
                    return Err(PyValueError::new_err(format!("unknown group key {other:?}")))
                }
            }
        }
        let query_id =
            query_id.ok_or_else(|| PyValueError::new_err("group is missing query_id"))?;
        let rewards = rewards.ok_or_else(|| PyValueError::new_err("group is missing rewards"))?;
        parsed.push(build_group(query_id, &rewards, truncated.as_deref())?);
    }
    let (kept, dropped) = coevo_core::grpo::filter_groups(parsed);
    let kept = kept
        .into_iter()
        .map(|g| {
            let d = PyDict::new(py);
            d.set_item("query_id", &g.query_id)?;
            d.set_item("rewards", g.rewards())?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    let dropped =
        dropped.into_iter().map(|(g, r)| (g.query_id, r.name().to_string())).collect();
    Ok((kept, dropped))
}

fn strategy_from(name: &str, tol: f64, max_iters: usize) -> PyResult<AggregationStrategy> {
    let kind = AggregationKind::parse(name).map_err(verr)?;
    AggregationStrategy { kind, weiszfeld_tol: tol, weiszfeld_max_iters: max_iters }
        .validated()
        .map_err(verr)
}

/// Aggregate repeated predictions into one point with the named strategy:
/// mean, coord_median, geo_median, or medoid.
#[pyfunction]
#[pyo3(signature = (points, strategy="geo_median", weiszfeld_tol=1e-9, weiszfeld_max_iters=1000))]
fn aggregate_runs(
    points: Vec<[f64; 2]>,
    strategy: &str,
    weiszfeld_tol: f64,
    weiszfeld_max_iters: usize,
) -> PyResult<(f64, f64)> {
    let strategy = strategy_from(strategy, weiszfeld_tol, weiszfeld_max_iters)?;
    let pts: Vec<Point2> = points.into_iter().map(point).collect();
    let p = coevo_core::aggregation::aggregate_runs(&pts, &strategy).map_err(verr)?;
    Ok((p.x, p.y))
}

/// Weiszfeld geometric median with convergence diagnostics.
#[pyfunction]
#[pyo3(signature = (points, weiszfeld_tol=1e-9, weiszfeld_max_iters=1000))]
fn geometric_median<'py>(
    py: Python<'py>,
    points: Vec<[f64; 2]>,
    weiszfeld_tol: f64,
    weiszfeld_max_iters: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let strategy = strategy_from("geo_median", weiszfeld_tol, weiszfeld_max_iters)?;
    let pts: Vec<Point2> = points.into_iter().map(point).collect();
    let g = coevo_core::aggregation::geometric_median(&pts, &strategy).map_err(verr)?;
    let d = PyDict::new(py);
    d.set_item("point", (g.point.x, g.point.y))?;
    d.set_item("converged", g.converged)?;
    d.set_item("iterations", g.iterations)?;
    Ok(d)
}

/// Whether any of the candidate points hits the target box.
#[pyfunction]
#[pyo3(signature = (points, task, k, scoring=None))]
fn oracle_at_k(
    points: Vec<[f64; 2]>,
    task: &Task,
    k: usize,
    scoring: Option<&Bound<'_, PyDict>>,
) -> PyResult<bool> {
    let pred = PredictionRecord::new(
        task.inner.task_id.clone(),
        points.into_iter().map(point).collect(),
        None,
    )
    .map_err(verr)?;
    Ok(coevo_core::evalkit::oracle_at_k(&pred, &task.inner, &scoring_from(scoring)?, k))
}

/// Whether the top-ranked candidate hits the target box.
#[pyfunction]
#[pyo3(signature = (points, ranking, task, scoring=None))]
fn top1_accuracy(
    points: Vec<[f64; 2]>,
    ranking: Vec<usize>,
    task: &Task,
    scoring: Option<&Bound<'_, PyDict>>,
) -> PyResult<bool> {
    let pred = PredictionRecord::new(
        task.inner.task_id.clone(),
        points.into_iter().map(point).collect(),
        Some(ranked_list(ranking)?),
    )
    .map_err(verr)?;
    coevo_core::evalkit::top1_accuracy(&pred, &task.inner, &scoring_from(scoring)?).map_err(verr)
}

/// Top-1 accuracy minus oracle rate: how much selection quality costs.
#[pyfunction]
fn delta_gap(oracle_rate: f64, top1_rate: f64) -> f64 {
    coevo_core::evalkit::delta_gap(oracle_rate, top1_rate)
}

/// Probability that at least one of k draws from n rollouts with c successes
/// succeeds.
#[pyfunction]
fn pass_at_k(n: u64, c: u64, k: u64) -> PyResult<f64> {
    coevo_core::evalkit::pass_at_k(n, c, k).map_err(verr)
}

fn decision_tuple(decision: FilterDecision) -> (bool, Option<String>) {
    match decision {
        FilterDecision::Keep => (true, None),
        FilterDecision::Reject(reason) => (false, Some(reason.name().to_string())),
    }
}

/// Geometric sanity checks on the task's target box. Returns
/// `(kept, reason)` with `reason = None` when the task is kept.
#[pyfunction]
#[pyo3(signature = (task, min_area_ratio=0.001, max_area_ratio=0.9))]
fn static_filter(
    task: &Task,
    min_area_ratio: f64,
    max_area_ratio: f64,
) -> PyResult<(bool, Option<String>)> {
    let cfg = FilterConfig { min_area_ratio, max_area_ratio, ..FilterConfig::default() }
        .validated()
        .map_err(verr)?;
    Ok(decision_tuple(coevo_core::evalkit::static_filter(&task.inner, &cfg)))
}

/// Keeps only tasks whose rollout outcomes are mixed; uniform success or
/// failure carries no learning signal.
#[pyfunction]
fn difficulty_preselect(outcomes: Vec<bool>) -> PyResult<(bool, Option<String>)> {
    coevo_core::evalkit::difficulty_preselect(&outcomes).map(decision_tuple).map_err(verr)
}

fn row_dict<'py>(py: Python<'py>, row: &LogRow) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("step", row.step)?;
    d.set_item("c_p", row.c_p)?;
    d.set_item("c_j", row.c_j)?;
    d.set_item("mean_r_acc", row.mean_r_acc)?;
    d.set_item("mean_r_cov", row.mean_r_cov)?;
    d.set_item("mean_r_top1", row.mean_r_top1)?;
    d.set_item("mean_r_ndcg", row.mean_r_ndcg)?;
    d.set_item("mean_r_proposer", row.mean_r_proposer)?;
    d.set_item("mean_r_critic", row.mean_r_critic)?;
    d.set_item("oracle_at_k", row.oracle_at_k)?;
    d.set_item("top1", row.top1)?;
    d.set_item("target_logit", row.target_logit)?;
    d.set_item("log_spread", row.log_spread)?;
    d.set_item("sharpness", row.sharpness)?;
    d.set_item("blindness", row.blindness)?;
    Ok(d)
}

/// Run the deterministic synthetic co-evolution loop and return the training
/// log: per-step rows plus the final proposer and critic parameters.
#[pyfunction]
#[pyo3(signature = (
    steps=300, tasks_per_step=8, group_size=8, learning_rate=0.05, alpha=0.01,
    master_seed=0, eval_tasks=500, proposer_target_logit=-1.0, proposer_log_spread=-2.1,
    proposer_k=5, critic_sharpness=2.0, critic_blindness=0.5
))]
#[allow(clippy::too_many_arguments)]
fn run_co_evolution<'py>(
    py: Python<'py>,
    steps: u64,
    tasks_per_step: usize,
    group_size: usize,
    learning_rate: f64,
    alpha: f64,
    master_seed: u64,
    eval_tasks: usize,
    proposer_target_logit: f64,
    proposer_log_spread: f64,
    proposer_k: usize,
    critic_sharpness: f64,
    critic_blindness: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = CoEvolutionConfig {
        steps,
        tasks_per_step,
        group_size,
        learning_rate,
        alpha,
        master_seed,
        eval_tasks,
        proposer_init: ProposerPolicy {
            target_logit: proposer_target_logit,
            log_spread: proposer_log_spread,
            k: proposer_k,
        },
        critic_init: CriticPolicy { sharpness: critic_sharpness, blindness: critic_blindness },
        ..CoEvolutionConfig::default()
    }
    .validated()
    .map_err(verr)?;
    let log = coevo_core::simenv::run_co_evolution(&cfg).map_err(verr)?;
    let rows =
        log.rows.iter().map(|r| row_dict(py, r)).collect::<PyResult<Vec<_>>>()?;
    let proposer = PyDict::new(py);
    proposer.set_item("target_logit", log.final_proposer.target_logit)?;
    proposer.set_item("log_spread", log.final_proposer.log_spread)?;
    proposer.set_item("k", log.final_proposer.k)?;
    let critic = PyDict::new(py);
    critic.set_item("sharpness", log.final_critic.sharpness)?;
    critic.set_item("blindness", log.final_critic.blindness)?;
    let d = PyDict::new(py);
    d.set_item("rows", rows)?;
    d.set_item("final_proposer", proposer)?;
    d.set_item("final_critic", critic)?;
    Ok(d)
}

/// Render candidate markers over the task's screen and return the binary PPM
/// bytes plus one annotation dict per marker.
#[pyfunction]
#[pyo3(signature = (points, task, marker_radius_px=8, background="wireframe"))]
fn render_ppm<'py>(
    py: Python<'py>,
    points: Vec<[f64; 2]>,
    task: &Task,
    marker_radius_px: u32,
    background: &str,
) -> PyResult<(Bound<'py, PyBytes>, Vec<Bound<'py, PyDict>>)> {
    let background = match background {
        "blank" => Background::BlankWhite,
        "wireframe" => Background::ElementWireframe,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown background {other:?} (expected blank or wireframe)"
            )))
        }
    };
    let style = RenderStyle { marker_radius_px, background, ..RenderStyle::default() }
        .validated()
        .map_err(verr)?;
    let cands = candidate_set(points)?;
    let img = render_marked(&task.inner, &cands, &style).map_err(verr)?;
    let markers = img
        .sidecar
        .iter()
        .map(|m| {
            let d = PyDict::new(py);
            d.set_item("index", m.index)?;
            d.set_item("center_px", m.center_px)?;
            d.set_item("marker_radius_px", m.marker_radius_px)?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    Ok((PyBytes::new(py, &ppm_bytes(&img)), markers))
}

#[pymodule]
fn coevo_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Task>()?;
    m.add_function(wrap_pyfunction!(gaussian_score, m)?)?;
    m.add_function(wrap_pyfunction!(hit, m)?)?;
    m.add_function(wrap_pyfunction!(reward_breakdown, m)?)?;
    m.add_function(wrap_pyfunction!(ndcg, m)?)?;
    m.add_function(wrap_pyfunction!(top1_score, m)?)?;
    m.add_function(wrap_pyfunction!(maturity_weighted, m)?)?;
    m.add_function(wrap_pyfunction!(maturity_update, m)?)?;
    m.add_function(wrap_pyfunction!(group_advantages, m)?)?;
    m.add_function(wrap_pyfunction!(grpo_objective, m)?)?;
    m.add_function(wrap_pyfunction!(filter_groups, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate_runs, m)?)?;
    m.add_function(wrap_pyfunction!(geometric_median, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_at_k, m)?)?;
    m.add_function(wrap_pyfunction!(top1_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(delta_gap, m)?)?;
    m.add_function(wrap_pyfunction!(pass_at_k, m)?)?;
    m.add_function(wrap_pyfunction!(static_filter, m)?)?;
    m.add_function(wrap_pyfunction!(difficulty_preselect, m)?)?;
    m.add_function(wrap_pyfunction!(run_co_evolution, m)?)?;
    m.add_function(wrap_pyfunction!(render_ppm, m)?)?;
    Ok(())
}
