//! Baseline policies that stand in for a learned navigator.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DistanceField, EvalError};
use crate::geometry::Point2;
use crate::simulator::{
    angle_diff, heading_to, keyed_rng, Action, AgentPose, EpisodeState, NoiseDomain,
    SUCCESS_DISTANCE,
};

/// Turn instead of moving when the heading error exceeds this (radians).
pub const HEADING_TOLERANCE: f64 = 7.5 * std::f64::consts::PI / 180.0;
/// Guided policies stop once this close to the goal.
pub const STOP_RADIUS: f64 = 0.5 * SUCCESS_DISTANCE;
/// Path-following lookahead in meters.
pub const LOOKAHEAD: f64 = 1.0;
/// Clearance the guided policies keep from walls when planning.
pub const POLICY_CLEARANCE: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    OracleClosedLoop,
    DeadReckoning,
    Random,
    External,
}

impl PolicyKind {
    pub fn short_name(self) -> &'static str {
        match self {
            PolicyKind::OracleClosedLoop => "oracle",
            PolicyKind::DeadReckoning => "deadreck",
            PolicyKind::Random => "random",
            PolicyKind::External => "external",
        }
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" | "oracle_closed_loop" => Ok(PolicyKind::OracleClosedLoop),
            "deadreck" | "dead_reckoning" => Ok(PolicyKind::DeadReckoning),
            "random" => Ok(PolicyKind::Random),
            "external" => Ok(PolicyKind::External),
            other => Err(format!("unknown policy `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    /// Recompute the path-following target every this many decisions.
    #[serde(default = "one")]
    pub replan_period: usize,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default)]
    pub seed: u64,
    /// Shell command for the external policy.
    #[serde(default)]
    pub command: Option<String>,
}

fn one() -> usize {
    1
}

fn default_max_steps() -> usize {
    super::DEFAULT_MAX_STEPS
}

impl PolicySpec {
    pub fn new(kind: PolicyKind) -> Self {
        Self {
            kind,
            replan_period: 1,
            max_steps: super::DEFAULT_MAX_STEPS,
            seed: 0,
            command: None,
        }
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.max_steps == 0 {
            return Err(EvalError::InvalidPolicy("max_steps must be positive".into()));
        }
        if self.replan_period == 0 {
            return Err(EvalError::InvalidPolicy("replan_period must be positive".into()));
        }
        if self.kind == PolicyKind::External && self.command.is_none() {
            return Err(EvalError::InvalidPolicy("external policy needs a command".into()));
        }
        Ok(())
    }
}

/// Chooses the next action for a running episode.
pub trait Policy {
    fn act(&mut self, state: &EpisodeState) -> Result<Action, EvalError>;

    /// Note left by the policy, e.g. why it stopped early.
    fn diagnostic(&self) -> Option<&str> {
        None
    }
}

/// Which pose estimate a guided policy plans from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoseSource {
    /// Ground-truth pose.
    True,
    /// Dead-reckoned pose, projected onto the plan with the episode scale.
    Believed,
}

/// Turn toward `target` when the heading error is above tolerance, else move
/// forward. An exact half-turn error resolves to TurnRight.
pub fn decide_toward(pose: AgentPose, target: Point2) -> Action {
    let p = pose.position();
    if p.distance(target) < 1e-9 {
        return Action::FORWARD;
    }
    let err = angle_diff(heading_to(p, target), pose.theta);
    if err.abs() > HEADING_TOLERANCE {
        if err > 0.0 {
            Action::RIGHT
        } else {
            Action::LEFT
        }
    } else {
        Action::FORWARD
    }
}

/// Follows a goal-rooted distance field from the true or believed pose.
pub struct GuidedPolicy {
    field: Arc<DistanceField>,
    source: PoseSource,
    replan_period: usize,
    decisions: usize,
    target: Option<Point2>,
    diagnostic: Option<String>,
}

impl GuidedPolicy {
    pub fn new(field: Arc<DistanceField>, source: PoseSource, replan_period: usize) -> Self {
        Self {
            field,
            source,
            replan_period: replan_period.max(1),
            decisions: 0,
            target: None,
            diagnostic: None,
        }
    }

    /// Pose in plan coordinates as seen by this policy.
    pub fn observed_pose(&self, state: &EpisodeState) -> AgentPose {
        match self.source {
            PoseSource::True => state.true_pose(),
            PoseSource::Believed => {
                let b = state.believed_pose();
                AgentPose::at(state.project_to_plan(b.position()), b.theta)
            }
        }
    }
}

impl Policy for GuidedPolicy {
    fn act(&mut self, state: &EpisodeState) -> Result<Action, EvalError> {
        let pose = self.observed_pose(state);
        let p = pose.position();
        if p.distance(self.field.goal()) < STOP_RADIUS {
            return Ok(Action::Stop);
        }
        if self.target.is_none() || self.decisions % self.replan_period == 0 {
            self.target = self.field.carrot(p, LOOKAHEAD);
        }
        self.decisions += 1;
        match self.target {
            Some(target) => Ok(decide_toward(pose, target)),
            None => {
                self.diagnostic = Some(format!("goal unreachable from {p}"));
                Ok(Action::Stop)
            }
        }
    }

    fn diagnostic(&self) -> Option<&str> {
        self.diagnostic.as_deref()
    }
}

/// Uniform random primitives with a small per-step stop probability.
pub struct RandomPolicy {
    seed: u64,
    stop_probability: f64,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            stop_probability: 0.02,
        }
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, state: &EpisodeState) -> Result<Action, EvalError> {
        let mut rng = keyed_rng(self.seed, NoiseDomain::Policy, state.step_count() as u64, 0);
        if rng.gen::<f64>() < self.stop_probability {
            return Ok(Action::Stop);
        }
        Ok(match rng.gen_range(0..3) {
            0 => Action::FORWARD,
            1 => Action::LEFT,
            _ => Action::RIGHT,
        })
    }
}

#[derive(Serialize)]
struct ExternalObservation<'a> {
    step: usize,
    pose: AgentPose,
    goal: Point2,
    instruction: Option<&'a str>,
}

#[derive(Deserialize)]
struct ExternalReply {
    action: String,
    #[serde(default, alias = "mag")]
    magnitude: Option<f64>,
}

/// Talks to a child process over line-delimited JSON. Each step the child
/// receives `{"step", "pose", "goal", "instruction"}` with the believed pose
/// and must answer `{"action": "...", "magnitude": num|null}`.
pub struct ExternalPolicy {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    instruction: Option<String>,
}

impl ExternalPolicy {
    pub fn spawn(command: &str, instruction: Option<String>) -> Result<Self, EvalError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Self {
            child,
            stdin,
            stdout,
            instruction,
        })
    }
}

impl Policy for ExternalPolicy {
    fn act(&mut self, state: &EpisodeState) -> Result<Action, EvalError> {
        let obs = ExternalObservation {
            step: state.step_count(),
            pose: state.believed_pose(),
            goal: state.goal(),
            instruction: self.instruction.as_deref(),
        };
        let line = serde_json::to_string(&obs)?;
        writeln!(self.stdin, "{line}").map_err(|e| EvalError::External(e.to_string()))?;
        self.stdin
            .flush()
            .map_err(|e| EvalError::External(e.to_string()))?;
        let mut reply = String::new();
        let n = self
            .stdout
            .read_line(&mut reply)
            .map_err(|e| EvalError::External(e.to_string()))?;
        if n == 0 {
            return Err(EvalError::External("policy process closed its output".into()));
        }
        let parsed: ExternalReply = serde_json::from_str(reply.trim())
            .map_err(|e| EvalError::MalformedAction(format!("{}: {e}", reply.trim())))?;
        Action::from_parts(&parsed.action, parsed.magnitude)
            .map_err(|e| EvalError::MalformedAction(e.to_string()))
    }
}

impl Drop for ExternalPolicy {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::TURN_STEP;

    #[test]
    fn aligned_goal_moves_forward() {
        let pose = AgentPose::new(0.0, 0.0, 0.0);
        assert_eq!(decide_toward(pose, Point2::new(0.0, 1.0)), Action::FORWARD);
    }

    #[test]
    fn goal_behind_turns_right() {
        let pose = AgentPose::new(0.0, 0.0, 0.0);
        assert_eq!(decide_toward(pose, Point2::new(0.0, -1.0)), Action::RIGHT);
        assert_eq!(decide_toward(pose, Point2::new(-1.0, 0.1)), Action::LEFT);
    }

    #[test]
    fn tolerance_is_half_a_turn() {
        let pose = AgentPose::new(0.0, 0.0, 0.0);
        let inside = Point2::from_heading(0.99 * HEADING_TOLERANCE);
        let outside = Point2::from_heading(1.01 * HEADING_TOLERANCE);
        assert_eq!(decide_toward(pose, inside), Action::FORWARD);
        assert_eq!(decide_toward(pose, outside), Action::RIGHT);
        assert!((2.0 * HEADING_TOLERANCE - TURN_STEP).abs() < 1e-15);
    }

    #[test]
    fn policy_names() {
        for k in [
            PolicyKind::OracleClosedLoop,
            PolicyKind::DeadReckoning,
            PolicyKind::Random,
            PolicyKind::External,
        ] {
            assert_eq!(k.short_name().parse::<PolicyKind>().unwrap(), k);
        }
        assert!(PolicySpec::new(PolicyKind::Random).with_max_steps(0).validate().is_err());
        assert!(PolicySpec::new(PolicyKind::External).validate().is_err());
    }
}
