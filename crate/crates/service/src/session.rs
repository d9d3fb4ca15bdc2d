//! Interactive episode sessions: creation, stepping, frames and export.

use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use fpnav_core::dataset::{decompose_action, parse_instruction, DatasetError, Episode, Instruction};
use fpnav_core::geometry::Point2;
use fpnav_core::render::{
    compose_dual_view, encode_png, overlay_pose_trajectory, raycast_observation, PlanRaster,
    RaycastConfig,
};
use fpnav_core::simulator::{Action, AgentPose, EpisodeState, NoiseConfig, World, SUCCESS_DISTANCE};

use crate::ServiceError;

pub const DEFAULT_SESSION_STEPS: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Running,
    /// Ended by the step limit rather than by a Stop action.
    Stopped,
    Success,
    Failure,
}

#[derive(Clone, Debug, Deserialize)]
pub struct CreateSession {
    pub floorplan_id: String,
    pub start_pose: AgentPose,
    pub instruction: String,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub max_steps: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct StepRequest {
    pub action: String,
    #[serde(default, alias = "mag")]
    pub magnitude: Option<f64>,
}

impl StepRequest {
    pub fn to_action(&self) -> Result<Action, ServiceError> {
        Action::from_parts(&self.action, self.magnitude)
            .map_err(|e| ServiceError::InvalidAction(e.to_string()))
    }
}

/// Client-facing state of a session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub floorplan_id: String,
    pub status: SessionStatus,
    pub step: usize,
    pub frame_url: String,
    pub true_pose: AgentPose,
    pub believed_pose: AgentPose,
    pub goal: Point2,
    pub instruction: Instruction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ne: Option<f64>,
    pub created_at: u64,
}

/// Push-channel payload sent after every step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub step: usize,
    pub status: SessionStatus,
    pub frame_url: String,
    pub believed_pose: AgentPose,
}

/// Persisted form of a session. Replaying `actions` from `start_pose`
/// rebuilds the live state exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub session_id: String,
    pub floorplan_id: String,
    pub created_at: u64,
    pub start_pose: AgentPose,
    pub goal: Point2,
    pub instruction: Instruction,
    pub noise: NoiseConfig,
    pub max_steps: usize,
    pub actions: Vec<Action>,
    pub status: SessionStatus,
}

pub struct Session {
    id: String,
    floorplan_id: String,
    created_at: u64,
    instruction: Instruction,
    start: AgentPose,
    state: EpisodeState,
    raster: Arc<PlanRaster>,
    ray: RaycastConfig,
    max_steps: usize,
    status: SessionStatus,
    frame: Vec<u8>,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("id", &self.id)
            .field("status", &self.status)
            .field("step", &self.state.step_count())
            .finish()
    }
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or_default()
}

fn parse_for_plan(world: &World, text: &str) -> Result<(Instruction, Point2), ServiceError> {
    let instruction = parse_instruction(text).map_err(|e| match e {
        DatasetError::InstructionParse {
            nearest,
            nearest_text,
            similarity,
            ..
        } => ServiceError::InstructionParse {
            nearest,
            nearest_text,
            similarity,
        },
        other => ServiceError::InvalidInstruction(other.to_string()),
    })?;
    let fp = &world.floorplan;
    let goal_region = fp.region(instruction.goal_id).ok_or_else(|| {
        ServiceError::InvalidInstruction(format!("plan has no region {}", instruction.goal_id))
    })?;
    if goal_region.region_type != instruction.goal_type {
        return Err(ServiceError::InvalidInstruction(format!(
            "region {} is a {}, not a {}",
            goal_region.id, goal_region.region_type, instruction.goal_type
        )));
    }
    Ok((instruction, goal_region.anchor()))
}

impl Session {
    /// Validates the request against the plan and renders the first frame.
    /// The goal is the pole of inaccessibility of the instruction's goal
    /// region.
    pub fn create(
        id: String,
        req: &CreateSession,
        world: Arc<World>,
        raster: Arc<PlanRaster>,
    ) -> Result<Self, ServiceError> {
        let start = req.start_pose;
        if !start.is_finite() || !world.is_free(start.position()) {
            return Err(ServiceError::PoseInvalid(start.position()));
        }
        let (instruction, goal) = parse_for_plan(&world, &req.instruction)?;
        let noise = req.noise;
        noise.validate().map_err(|e| ServiceError::InvalidNoise(e.to_string()))?;
        let state = EpisodeState::reset(world, start, goal, noise)?;
        let mut session = Self {
            id,
            floorplan_id: req.floorplan_id.clone(),
            created_at: now(),
            instruction,
            start,
            state,
            raster,
            ray: RaycastConfig::default(),
            max_steps: req.max_steps.unwrap_or(DEFAULT_SESSION_STEPS).max(1),
            status: SessionStatus::Running,
            frame: Vec::new(),
        };
        session.render()?;
        Ok(session)
    }

    /// Rebuilds a session from its snapshot by replaying its actions.
    pub fn restore(
        snapshot: &SessionSnapshot,
        world: Arc<World>,
        raster: Arc<PlanRaster>,
    ) -> Result<Self, ServiceError> {
        let state = EpisodeState::reset(world, snapshot.start_pose, snapshot.goal, snapshot.noise)?;
        let mut session = Self {
            id: snapshot.session_id.clone(),
            floorplan_id: snapshot.floorplan_id.clone(),
            created_at: snapshot.created_at,
            instruction: snapshot.instruction.clone(),
            start: snapshot.start_pose,
            state,
            raster,
            ray: RaycastConfig::default(),
            max_steps: snapshot.max_steps,
            status: SessionStatus::Running,
            frame: Vec::new(),
        };
        for &a in &snapshot.actions {
            session.state.step(a)?;
        }
        session.status = snapshot.status;
        session.render()?;
        Ok(session)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    pub fn state(&self) -> &EpisodeState {
        &self.state
    }

    /// PNG bytes of the current frame.
    pub fn frame_png(&self) -> &[u8] {
        &self.frame
    }

    pub fn frame_url(&self) -> String {
        format!("/sessions/{}/frame.png?step={}", self.id, self.state.step_count())
    }

    /// Raycast view from the true pose beside the plan with the believed
    /// trajectory as the agent would place it on the plan.
    fn render(&mut self) -> Result<(), ServiceError> {
        let world = self.state.world();
        let obs = raycast_observation(world, self.state.true_pose(), &self.ray, &self.raster.config)?;
        let believed = self.state.believed_trajectory();
        let (history, current) = believed.split_at(believed.len() - 1);
        let plan = overlay_pose_trajectory(&self.raster, history, current[0], self.state.scale_alpha());
        let frame = compose_dual_view(&obs.image, &plan, self.state.step_count())?;
        self.frame = encode_png(&frame.image)?;
        Ok(())
    }

    /// Applies one action; composite actions run as primitives. Stop
    /// evaluates success. Reaching the step limit forces a Stop and reports
    /// `stopped`.
    pub fn step(&mut self, action: Action) -> Result<SessionView, ServiceError> {
        if self.state.is_terminated() {
            return Err(ServiceError::SessionStopped(self.id.clone()));
        }
        let mut forced = false;
        for primitive in decompose_action(action) {
            if primitive != Action::Stop && self.state.step_count() + 1 >= self.max_steps {
                forced = true;
                break;
            }
            self.state.step(primitive)?;
            if self.state.is_terminated() {
                break;
            }
        }
        if !self.state.is_terminated() && self.state.step_count() + 1 >= self.max_steps {
            forced = true;
        }
        if forced && !self.state.is_terminated() {
            self.state.step(Action::Stop)?;
        }
        if self.state.is_terminated() {
            let success = self.state.distance_to_goal() < SUCCESS_DISTANCE;
            self.status = match (forced, success) {
                (true, _) => SessionStatus::Stopped,
                (false, true) => SessionStatus::Success,
                (false, false) => SessionStatus::Failure,
            };
        }
        self.render()?;
        Ok(self.view())
    }

    pub fn view(&self) -> SessionView {
        SessionView {
            session_id: self.id.clone(),
            floorplan_id: self.floorplan_id.clone(),
            status: self.status,
            step: self.state.step_count(),
            frame_url: self.frame_url(),
            true_pose: self.state.true_pose(),
            believed_pose: self.state.believed_pose(),
            goal: self.state.goal(),
            instruction: self.instruction.clone(),
            ne: self.state.is_terminated().then(|| self.state.distance_to_goal()),
            created_at: self.created_at,
        }
    }

    pub fn event(&self) -> SessionEvent {
        SessionEvent {
            step: self.state.step_count(),
            status: self.status,
            frame_url: self.frame_url(),
            believed_pose: self.state.believed_pose(),
        }
    }

    pub fn snapshot(&self) -> SessionSnapshot {
        SessionSnapshot {
            session_id: self.id.clone(),
            floorplan_id: self.floorplan_id.clone(),
            created_at: self.created_at,
            start_pose: self.start,
            goal: self.state.goal(),
            instruction: self.instruction.clone(),
            noise: *self.state.noise(),
            max_steps: self.max_steps,
            actions: self.state.actions().to_vec(),
            status: self.status,
        }
    }

    /// The recorded demonstration as an episode: the true positions become
    /// the path and the executed primitives the actions. Noise-free sessions
    /// must replay to success.
    pub fn to_episode(&self) -> Result<Episode, ServiceError> {
        if !self.state.is_terminated() {
            return Err(ServiceError::SessionRunning(self.id.clone()));
        }
        let mut gt_path: Vec<Point2> = Vec::new();
        for p in self.state.trajectory() {
            let q = p.position();
            if gt_path.last() != Some(&q) {
                gt_path.push(q);
            }
        }
        let noise = *self.state.noise();
        let episode = Episode {
            episode_id: format!("session-{}", self.id),
            floorplan: self.floorplan_id.clone(),
            start_pose: self.start,
            goal: self.state.goal(),
            instruction: self.instruction.clone(),
            gt_path,
            gt_actions: self.state.actions().to_vec(),
            noise: (!noise.is_noiseless()).then_some(noise),
        };
        let checked = if noise.is_noiseless() {
            episode.validate_on(self.state.world())
        } else {
            episode.validate()
        };
        checked.map_err(|e| ServiceError::EpisodeInvalid(e.to_string()))?;
        Ok(episode)
    }
}
