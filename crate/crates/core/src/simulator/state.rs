use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::action::{normalize_angle, Action, AgentPose};
use super::noise::{slot, standard_normal, NoiseConfig, NoiseDomain};
use super::{SimError, SUCCESS_DISTANCE, WALL_CLEARANCE};
use crate::geometry::{extract_walls, FloorPlan, Point2, WallSet};

/// A floor plan together with its extracted walls, shared between episodes.
#[derive(Clone, Debug)]
pub struct World {
    pub floorplan: FloorPlan,
    pub walls: WallSet,
}

impl World {
    pub fn new(floorplan: FloorPlan) -> Self {
        let walls = extract_walls(&floorplan);
        Self { floorplan, walls }
    }

    /// True when `p` is inside some region and at least the wall clearance
    /// away from every wall.
    pub fn is_free(&self, p: Point2) -> bool {
        self.floorplan.locate(p).is_some() && self.walls.min_distance(p) >= WALL_CLEARANCE - 1e-9
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    #[default]
    Euclidean,
    Geodesic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    /// Distance actually travelled (zero for turns and Stop).
    pub travelled: f64,
    /// The forward motion was cut short by a wall.
    pub collided: bool,
}

/// One line of the trajectory log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: usize,
    pub action: String,
    pub mag: Option<f64>,
    pub true_pose: AgentPose,
    pub believed_pose: AgentPose,
}

/// Single-episode state machine over continuous 2D poses.
#[derive(Clone, Debug)]
pub struct EpisodeState {
    world: Arc<World>,
    noise: NoiseConfig,
    true_pose: AgentPose,
    believed_pose: AgentPose,
    goal: Point2,
    trajectory: Vec<AgentPose>,
    believed_trajectory: Vec<AgentPose>,
    actions: Vec<Action>,
    terminated: bool,
    scale_alpha: f64,
}

impl EpisodeState {
    /// Starts an episode. The map scale multiplier is drawn once here.
    pub fn reset(
        world: Arc<World>,
        start: AgentPose,
        goal: Point2,
        noise: NoiseConfig,
    ) -> Result<Self, SimError> {
        noise.validate()?;
        if !start.is_finite() || world.floorplan.locate(start.position()).is_none() {
            return Err(SimError::StartOutsidePlan(start.position()));
        }
        if !goal.is_finite() || world.floorplan.locate(goal).is_none() {
            return Err(SimError::GoalOutsidePlan(goal));
        }
        let scale_alpha = if noise.sigma_scale == 0.0 {
            1.0
        } else {
            1.0 + noise.sigma_scale
                * standard_normal(noise.seed, NoiseDomain::Episode, 0, slot::SCALE)
        };
        Ok(Self {
            world,
            noise,
            true_pose: start,
            believed_pose: start,
            goal,
            trajectory: vec![start],
            believed_trajectory: vec![start],
            actions: Vec::new(),
            terminated: false,
            scale_alpha,
        })
    }

    pub fn world(&self) -> &Arc<World> {
        &self.world
    }

    pub fn floorplan(&self) -> &FloorPlan {
        &self.world.floorplan
    }

    pub fn noise(&self) -> &NoiseConfig {
        &self.noise
    }

    pub fn true_pose(&self) -> AgentPose {
        self.true_pose
    }

    pub fn believed_pose(&self) -> AgentPose {
        self.believed_pose
    }

    pub fn goal(&self) -> Point2 {
        self.goal
    }

    /// True poses, starting with the start pose, one per executed primitive.
    pub fn trajectory(&self) -> &[AgentPose] {
        &self.trajectory
    }

    pub fn believed_trajectory(&self) -> &[AgentPose] {
        &self.believed_trajectory
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn step_count(&self) -> usize {
        self.trajectory.len() - 1
    }

    pub fn is_terminated(&self) -> bool {
        self.terminated
    }

    pub fn scale_alpha(&self) -> f64 {
        self.scale_alpha
    }

    /// Executes one primitive action.
    ///
    /// True motion follows the noisy transition model; the believed pose uses
    /// the same update with all noise terms zero. Forward motion of either
    /// pose is truncated so it keeps [`WALL_CLEARANCE`] from every wall.
    pub fn step(&mut self, action: Action) -> Result<StepOutcome, SimError> {
        if self.terminated {
            return Err(SimError::Terminated);
        }
        if !action.is_primitive() {
            return Err(SimError::NotPrimitive(action));
        }
        let t = self.step_count() as u64;
        let seed = self.noise.seed;
        let draw = |sigma: f64, s: u32| {
            if sigma == 0.0 {
                0.0
            } else {
                sigma * standard_normal(seed, NoiseDomain::Actuation, t, s)
            }
        };

        let mut outcome = StepOutcome {
            travelled: 0.0,
            collided: false,
        };
        match action {
            Action::TurnLeft(delta) | Action::TurnRight(delta) => {
                let sgn = if matches!(action, Action::TurnRight(_)) {
                    1.0
                } else {
                    -1.0
                };
                let eps_rot = draw(self.noise.sigma_rot, slot::ROT);
                let p = self.true_pose;
                self.true_pose = AgentPose {
                    theta: normalize_angle(p.theta + sgn * delta + eps_rot),
                    ..p
                };
                let b = self.believed_pose;
                self.believed_pose = AgentPose {
                    theta: normalize_angle(b.theta + sgn * delta),
                    ..b
                };
            }
            Action::MoveForward(nominal) => {
                let eps_m = draw(self.noise.sigma_move, slot::MOVE);
                let eps_d = draw(self.noise.sigma_drift, slot::DRIFT);
                let (pose, travelled, collided) =
                    self.advance(self.true_pose, nominal * (1.0 + eps_m), eps_d);
                self.true_pose = pose;
                outcome = StepOutcome {
                    travelled,
                    collided,
                };
                let (believed, _, _) = self.advance(self.believed_pose, nominal, 0.0);
                self.believed_pose = believed;
            }
            Action::Stop => self.terminated = true,
        }
        self.trajectory.push(self.true_pose);
        self.believed_trajectory.push(self.believed_pose);
        self.actions.push(action);
        Ok(outcome)
    }

    fn advance(&self, pose: AgentPose, distance: f64, eps_heading: f64) -> (AgentPose, f64, bool) {
        let theta = normalize_angle(pose.theta + eps_heading);
        let forward = Point2::from_heading(theta);
        let (dir, want) = if distance >= 0.0 {
            (forward, distance)
        } else {
            (-forward, -distance)
        };
        let origin = pose.position();
        let allowed = self
            .world
            .walls
            .clearance_limit(origin, dir, want, WALL_CLEARANCE);
        let (travel, collided) = if allowed >= want {
            (want, false)
        } else {
            // Stay a hair short of the clearance band.
            ((allowed - 1e-9).max(0.0), true)
        };
        let signed = if distance >= 0.0 { travel } else { -travel };
        let next = if collided {
            let p = origin + dir * travel;
            AgentPose { x: p.x, y: p.y, theta }
        } else {
            AgentPose {
                x: pose.x + signed * theta.sin(),
                y: pose.y + signed * theta.cos(),
                theta,
            }
        };
        (next, travel, collided)
    }

    /// Position as it appears on the floor plan: `α · p`.
    pub fn project_to_plan(&self, p: Point2) -> Point2 {
        project_to_plan(self.scale_alpha, p)
    }

    /// Distance from the current true position to the goal.
    pub fn distance_to_goal(&self) -> f64 {
        self.true_pose.position().distance(self.goal)
    }

    /// Success check with Euclidean distance. Only valid after Stop.
    pub fn check_success(&self) -> Result<bool, SimError> {
        if !self.terminated {
            return Err(SimError::NotTerminated);
        }
        Ok(self.distance_to_goal() < SUCCESS_DISTANCE)
    }

    /// Success check using a caller-supplied distance-to-goal function, e.g.
    /// a geodesic distance field.
    pub fn check_success_with(&self, distance: impl Fn(Point2) -> f64) -> Result<bool, SimError> {
        if !self.terminated {
            return Err(SimError::NotTerminated);
        }
        Ok(distance(self.true_pose.position()) < SUCCESS_DISTANCE)
    }

    /// Summarizes a terminated episode. `distance` measures the distance to the
    /// goal in the chosen mode; `shortest_path_length` is the reference path
    /// length from the start.
    pub fn result(
        &self,
        shortest_path_length: f64,
        distance: impl Fn(Point2) -> f64,
    ) -> Result<EpisodeResult, SimError> {
        if !self.terminated {
            return Err(SimError::NotTerminated);
        }
        let ne = distance(self.true_pose.position());
        let oracle_success = self
            .trajectory
            .iter()
            .any(|p| distance(p.position()) < SUCCESS_DISTANCE);
        Ok(EpisodeResult {
            goal: self.goal,
            final_pose: self.true_pose,
            trajectory: self.trajectory.clone(),
            success: ne < SUCCESS_DISTANCE,
            ne,
            oracle_success,
            path_length: path_length(&self.trajectory),
            shortest_path_length,
            steps: self.step_count(),
        })
    }

    pub fn log_records(&self) -> Vec<TrajectoryRecord> {
        self.actions
            .iter()
            .enumerate()
            .map(|(i, a)| TrajectoryRecord {
                t: i,
                action: a.kind().name().to_string(),
                mag: a.magnitude(),
                true_pose: self.trajectory[i + 1],
                believed_pose: self.believed_trajectory[i + 1],
            })
            .collect()
    }
}

pub fn project_to_plan(alpha: f64, p: Point2) -> Point2 {
    p * alpha
}

/// Sum of consecutive position distances.
pub fn path_length(poses: &[AgentPose]) -> f64 {
    poses
        .windows(2)
        .map(|w| w[0].position().distance(w[1].position()))
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub goal: Point2,
    pub final_pose: AgentPose,
    pub trajectory: Vec<AgentPose>,
    pub success: bool,
    pub ne: f64,
    pub oracle_success: bool,
    pub path_length: f64,
    pub shortest_path_length: f64,
    pub steps: usize,
}
