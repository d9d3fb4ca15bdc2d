//! Navigation metrics, free-space shortest paths, baseline policies and the
//! benchmark runner.

mod metrics;
mod planner;
mod policy;
mod runner;

use thiserror::Error;

pub use metrics::{
    navigation_error, oracle_success, spl, success, summarize, GoalDistance, MetricsSummary,
    TableFormat,
};
pub use planner::{
    shortest_path_length, DistanceField, GridMap, MaskRect, Planner, PLANNING_RESOLUTION,
};
pub use policy::{
    decide_toward, ExternalPolicy, GuidedPolicy, Policy, PolicyKind, PolicySpec, PoseSource,
    RandomPolicy, HEADING_TOLERANCE, LOOKAHEAD, POLICY_CLEARANCE, STOP_RADIUS,
};
pub use runner::{
    drive, mask_rect, format_table, run_benchmark, run_episode, AblationSpec, BenchmarkReport,
    BenchmarkRow, EpisodeLog, EpisodeRun, NavTask, PlanContext, PlanMode, DEFAULT_MAX_STEPS,
};

use crate::geometry::Point2;
use crate::simulator::SimError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("point {0} is outside every region")]
    OutsideRegions(Point2),
    #[error("point {0} is inside a wall's clearance band")]
    InWall(Point2),
    #[error("episode {index} has non-positive shortest path length {value}")]
    NonPositiveShortestPath { index: usize, value: f64 },
    #[error("no episodes to evaluate")]
    EmptyEpisodes,
    #[error("policy emitted a malformed action: {0}")]
    MalformedAction(String),
    #[error("external policy failed: {0}")]
    External(String),
    #[error("no alternative floor plan available for random_plan mode")]
    NoAlternativePlan,
    #[error("invalid ablation: {0}")]
    InvalidAblation(String),
    #[error("invalid policy spec: {0}")]
    InvalidPolicy(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
