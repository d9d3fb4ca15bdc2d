//! Episode simulator: discrete actions over continuous 2D poses with
//! actuation noise, map-scale noise, vertex jitter and wall collision.

mod action;
mod jitter;
mod noise;
mod state;

use thiserror::Error;

pub use action::{
    angle_diff, heading_to, nominal_step, normalize_angle, Action, ActionKind, AgentPose,
    FORWARD_STEP, TURN_STEP,
};
pub use jitter::{jitter_floorplan, vertex_displacement, MAX_JITTER_RETRIES};
pub use noise::{
    keyed_rng, mix_seed, slot, standard_normal, NoiseConfig, NoiseDomain, DRIFT_PER_MOVE,
};
pub use state::{
    path_length, project_to_plan, DistanceMode, EpisodeResult, EpisodeState, StepOutcome,
    TrajectoryRecord, World,
};

use crate::geometry::Point2;

/// An episode succeeds when it ends strictly closer than this to the goal.
pub const SUCCESS_DISTANCE: f64 = 3.0;
/// Minimum distance the agent keeps from any wall.
pub const WALL_CLEARANCE: f64 = 0.05;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SimError {
    #[error("start position {0} is outside every region")]
    StartOutsidePlan(Point2),
    #[error("goal position {0} is outside every region")]
    GoalOutsidePlan(Point2),
    #[error("episode already terminated")]
    Terminated,
    #[error("episode has not terminated yet")]
    NotTerminated,
    #[error("action {0} is not a primitive; decompose it first")]
    NotPrimitive(Action),
    #[error("malformed action: {0}")]
    MalformedAction(String),
    #[error("invalid noise configuration: {0}")]
    InvalidNoise(String),
}

/// Convenience wrapper matching the free-function form of [`EpisodeState::reset`].
pub fn reset(
    world: std::sync::Arc<World>,
    start: AgentPose,
    goal: Point2,
    noise: NoiseConfig,
) -> Result<EpisodeState, SimError> {
    EpisodeState::reset(world, start, goal, noise)
}
