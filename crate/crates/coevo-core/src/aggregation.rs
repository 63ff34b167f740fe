//! Spatial-consistency aggregation over repeated inference runs: centroid,
//! coordinate-wise median, Weiszfeld geometric median, and medoid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{euclidean_distance, Point2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationKind {
    Mean,
    CoordMedian,
    GeoMedian,
    Medoid,
}

impl AggregationKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "mean" => Ok(Self::Mean),
            "coord_median" => Ok(Self::CoordMedian),
            "geo_median" => Ok(Self::GeoMedian),
            "medoid" => Ok(Self::Medoid),
            other => Err(Error::Argument(format!(
                "unknown aggregation strategy {other:?} (expected mean, coord_median, geo_median, medoid)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Mean => "mean",
            Self::CoordMedian => "coord_median",
            Self::GeoMedian => "geo_median",
            Self::Medoid => "medoid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregationStrategy {
    pub kind: AggregationKind,
    pub weiszfeld_tol: f64,
    pub weiszfeld_max_iters: usize,
}

impl AggregationStrategy {
    pub fn new(kind: AggregationKind) -> Self {
        Self { kind, weiszfeld_tol: 1e-9, weiszfeld_max_iters: 1000 }
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.weiszfeld_tol > 0.0) {
            return Err(Error::Argument(format!(
                "weiszfeld_tol must be positive, got {}",
                self.weiszfeld_tol
            )));
        }
        if self.weiszfeld_max_iters == 0 {
            return Err(Error::Argument("weiszfeld_max_iters must be at least 1".into()));
        }
        Ok(self)
    }
}

pub fn arithmetic_mean(points: &[Point2]) -> Result<Point2> {
    if points.is_empty() {
        return Err(Error::EmptySet);
    }
    let n = points.len() as f64;
    Ok(Point2::new(
        points.iter().map(|p| p.x).sum::<f64>() / n,
        points.iter().map(|p| p.y).sum::<f64>() / n,
    ))
}

fn median_1d(mut values: Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("coordinates must not be NaN"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

pub fn coordinate_median(points: &[Point2]) -> Result<Point2> {
    if points.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(Point2::new(
        median_1d(points.iter().map(|p| p.x).collect()),
        median_1d(points.iter().map(|p| p.y).collect()),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoMedian {
    pub point: Point2,
    pub converged: bool,
    pub iterations: usize,
}

/// Total distance from `p` to every point in the set — the quantity the
/// geometric median minimizes.
pub fn distance_sum(p: Point2, points: &[Point2]) -> f64 {
    points.iter().map(|&q| euclidean_distance(p, q)).sum()
}

fn weiszfeld_map(current: Point2, points: &[Point2], tol: f64) -> Point2 {
    let mut num_x = 0.0;
    let mut num_y = 0.0;
    let mut denom = 0.0;
    for &p in points {
        let mut d = euclidean_distance(current, p);
        if d < tol {
            d += 1e-12;
        }
        num_x += p.x / d;
        num_y += p.y / d;
        denom += 1.0 / d;
    }
    Point2::new(num_x / denom, num_y / denom)
}

/// Weiszfeld iteration started at the centroid. Iterates landing on a data
/// point get that point's denominator regularized instead of dividing by
/// zero.
///
/// Plain Weiszfeld contracts linearly, and the rate approaches 1 when the
/// minimizer sits close to a data point, which can leave the step length
/// above `tol` for thousands of iterations. After each pair of map
/// applications we therefore extrapolate along the dominant contraction
/// direction (Aitken's geometric-series limit) and accept the jump only when
/// it improves the objective, keeping the monotone-descent guarantee.
pub fn geometric_median(points: &[Point2], strategy: &AggregationStrategy) -> Result<GeoMedian> {
    if points.is_empty() {
        return Err(Error::EmptySet);
    }
    let tol = strategy.weiszfeld_tol;
    let max_iters = strategy.weiszfeld_max_iters;
    let mut current = arithmetic_mean(points)?;
    let mut iterations = 0usize;
    while iterations < max_iters {
        let t1 = weiszfeld_map(current, points, tol);
        iterations += 1;
        let d1 = (t1.x - current.x, t1.y - current.y);
        let n1 = (d1.0 * d1.0 + d1.1 * d1.1).sqrt();
        if n1 < tol {
            return Ok(GeoMedian { point: t1, converged: true, iterations });
        }
        if iterations == max_iters {
            current = t1;
            break;
        }

        let t2 = weiszfeld_map(t1, points, tol);
        iterations += 1;
        let d2 = (t2.x - t1.x, t2.y - t1.y);
        let n2 = (d2.0 * d2.0 + d2.1 * d2.1).sqrt();
        if n2 < tol {
            return Ok(GeoMedian { point: t2, converged: true, iterations });
        }

        current = t2;
        // Ratio of consecutive displacements estimates the dominant
        // eigenvalue r of the contraction; the remaining geometric series
        // sums to d2 * r / (1 - r).
        let r = (d1.0 * d2.0 + d1.1 * d2.1) / (n1 * n1);
        if r > 0.0 && r < 1.0 {
            let gamma = r / (1.0 - r);
            let jump = Point2::new(t2.x + gamma * d2.0, t2.y + gamma * d2.1);
            if distance_sum(jump, points) < distance_sum(t2, points) {
                current = jump;
            }
        }
    }
    Ok(GeoMedian { point: current, converged: false, iterations: max_iters })
}

/// The input point with the smallest total distance to the rest; ties go to
/// the lowest index.
pub fn medoid(points: &[Point2]) -> Result<Point2> {
    if points.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut best = points[0];
    let mut best_sum = f64::INFINITY;
    for &candidate in points {
        let sum = distance_sum(candidate, points);
        if sum < best_sum {
            best_sum = sum;
            best = candidate;
        }
    }
    Ok(best)
}

pub fn aggregate_runs(per_run_predictions: &[Point2], strategy: &AggregationStrategy) -> Result<Point2> {
    match strategy.kind {
        AggregationKind::Mean => arithmetic_mean(per_run_predictions),
        AggregationKind::CoordMedian => coordinate_median(per_run_predictions),
        AggregationKind::GeoMedian => {
            geometric_median(per_run_predictions, strategy).map(|g| g.point)
        }
        AggregationKind::Medoid => medoid(per_run_predictions),
    }
}
