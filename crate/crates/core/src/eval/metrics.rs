//! NE, SR, OSR and SPL.

use serde::{Deserialize, Serialize};

use super::{DistanceField, EvalError};
use crate::geometry::Point2;
use crate::simulator::{EpisodeResult, SUCCESS_DISTANCE};

/// How distance to the goal is measured.
#[derive(Clone, Copy, Debug)]
pub enum GoalDistance<'a> {
    Euclidean(Point2),
    /// Free-space shortest path via a goal-rooted distance field.
    Geodesic(&'a DistanceField),
}

impl GoalDistance<'_> {
    pub fn measure(&self, p: Point2) -> f64 {
        match self {
            GoalDistance::Euclidean(goal) => p.distance(*goal),
            GoalDistance::Geodesic(field) => field.distance_from(p),
        }
    }
}

/// Distance from the final position to the goal.
pub fn navigation_error(result: &EpisodeResult, metric: GoalDistance<'_>) -> f64 {
    metric.measure(result.final_pose.position())
}

pub fn success(result: &EpisodeResult) -> bool {
    result.ne < SUCCESS_DISTANCE
}

/// Some recorded position came within the success distance.
pub fn oracle_success(result: &EpisodeResult, metric: GoalDistance<'_>) -> bool {
    result
        .trajectory
        .iter()
        .any(|p| metric.measure(p.position()) < SUCCESS_DISTANCE)
}

/// Mean of `S·L / max(P, L)` over the batch.
pub fn spl(results: &[EpisodeResult]) -> Result<f64, EvalError> {
    if results.is_empty() {
        return Err(EvalError::EmptyEpisodes);
    }
    let mut total = 0.0;
    for (index, r) in results.iter().enumerate() {
        let l = r.shortest_path_length;
        if l.is_nan() || l <= 0.0 {
            return Err(EvalError::NonPositiveShortestPath { index, value: l });
        }
        if success(r) {
            total += l / r.path_length.max(l);
        }
    }
    Ok(total / results.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub n_episodes: usize,
    pub ne_mean: f64,
    pub sr: f64,
    pub osr: f64,
    pub spl: f64,
}

pub fn summarize(results: &[EpisodeResult]) -> Result<MetricsSummary, EvalError> {
    let spl = spl(results)?;
    let n = results.len() as f64;
    let frac = |f: &dyn Fn(&EpisodeResult) -> bool| results.iter().filter(|r| f(r)).count() as f64 / n;
    Ok(MetricsSummary {
        n_episodes: results.len(),
        ne_mean: results.iter().map(|r| r.ne).sum::<f64>() / n,
        sr: frac(&success),
        osr: frac(&|r| r.oracle_success),
        spl,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Md,
    Csv,
}

impl std::str::FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "md" => Ok(TableFormat::Md),
            "csv" => Ok(TableFormat::Csv),
            other => Err(format!("unknown table format `{other}` (expected md or csv)")),
        }
    }
}
