use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::SimError;
use crate::geometry::Point2;

/// Primitive forward step in meters.
pub const FORWARD_STEP: f64 = 0.25;
/// Primitive turn in radians (15 degrees).
pub const TURN_STEP: f64 = std::f64::consts::PI / 12.0;

const PRIMITIVE_TOL: f64 = 1e-9;

/// Normalizes an angle to `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Signed smallest difference `to - from` in `(-π, π]`.
pub fn angle_diff(to: f64, from: f64) -> f64 {
    let mut d = (to - from).rem_euclid(TAU);
    if d > std::f64::consts::PI {
        d -= TAU;
    }
    d
}

/// Heading that points from `from` toward `to` (0 faces +y, clockwise positive).
pub fn heading_to(from: Point2, to: Point2) -> f64 {
    normalize_angle((to.x - from.x).atan2(to.y - from.y))
}

/// Planar pose. `theta = 0` faces +y and increases clockwise, so a forward
/// move of `d` adds `d sin θ` to x and `d cos θ` to y.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AgentPose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl AgentPose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn at(p: Point2, theta: f64) -> Self {
        Self::new(p.x, p.y, theta)
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }
}

impl Serialize for AgentPose {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        [self.x, self.y, self.theta].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AgentPose {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let [x, y, theta] = <[f64; 3]>::deserialize(deserializer)?;
        Ok(Self::new(x, y, theta))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActionKind {
    MoveForward,
    TurnLeft,
    TurnRight,
    Stop,
}

impl ActionKind {
    pub const ALL: [ActionKind; 4] = [
        ActionKind::MoveForward,
        ActionKind::TurnLeft,
        ActionKind::TurnRight,
        ActionKind::Stop,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActionKind::MoveForward => "MoveForward",
            ActionKind::TurnLeft => "TurnLeft",
            ActionKind::TurnRight => "TurnRight",
            ActionKind::Stop => "Stop",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Size of one primitive of this kind, `None` for Stop.
    pub fn primitive(self) -> Option<f64> {
        match self {
            ActionKind::MoveForward => Some(FORWARD_STEP),
            ActionKind::TurnLeft | ActionKind::TurnRight => Some(TURN_STEP),
            ActionKind::Stop => None,
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A discrete action. Magnitudes are meters for forward moves and radians
/// for turns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Action {
    MoveForward(f64),
    TurnLeft(f64),
    TurnRight(f64),
    Stop,
}

impl Action {
    pub const FORWARD: Action = Action::MoveForward(FORWARD_STEP);
    pub const LEFT: Action = Action::TurnLeft(TURN_STEP);
    pub const RIGHT: Action = Action::TurnRight(TURN_STEP);

    /// Builds an action from a kind name and optional magnitude; a missing
    /// magnitude means one primitive.
    pub fn from_parts(kind: &str, magnitude: Option<f64>) -> Result<Self, SimError> {
        let kind = ActionKind::from_name(kind)
            .ok_or_else(|| SimError::MalformedAction(format!("unknown action `{kind}`")))?;
        Self::with_kind(kind, magnitude)
    }

    pub fn with_kind(kind: ActionKind, magnitude: Option<f64>) -> Result<Self, SimError> {
        if kind == ActionKind::Stop {
            return Ok(Action::Stop);
        }
        let m = magnitude.or(kind.primitive()).unwrap_or_default();
        if !(m.is_finite() && m > 0.0) {
            return Err(SimError::MalformedAction(format!(
                "{kind} magnitude must be positive, got {m}"
            )));
        }
        Ok(match kind {
            ActionKind::MoveForward => Action::MoveForward(m),
            ActionKind::TurnLeft => Action::TurnLeft(m),
            ActionKind::TurnRight => Action::TurnRight(m),
            ActionKind::Stop => unreachable!(),
        })
    }

    pub fn kind(&self) -> ActionKind {
        match self {
            Action::MoveForward(_) => ActionKind::MoveForward,
            Action::TurnLeft(_) => ActionKind::TurnLeft,
            Action::TurnRight(_) => ActionKind::TurnRight,
            Action::Stop => ActionKind::Stop,
        }
    }

    pub fn magnitude(&self) -> Option<f64> {
        match *self {
            Action::MoveForward(m) | Action::TurnLeft(m) | Action::TurnRight(m) => Some(m),
            Action::Stop => None,
        }
    }

    /// True for Stop and for single-primitive moves and turns.
    pub fn is_primitive(&self) -> bool {
        match (self.magnitude(), self.kind().primitive()) {
            (Some(m), Some(p)) => (m - p).abs() <= PRIMITIVE_TOL,
            _ => true,
        }
    }

    /// Human-readable phrase, e.g. `move forward 75 cm` or `turn left 30 degrees`.
    pub fn describe(&self) -> String {
        match *self {
            Action::MoveForward(m) => format!("move forward {} cm", (m * 100.0).round() as i64),
            Action::TurnLeft(m) => format!("turn left {} degrees", m.to_degrees().round() as i64),
            Action::TurnRight(m) => {
                format!("turn right {} degrees", m.to_degrees().round() as i64)
            }
            Action::Stop => "stop".to_string(),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.magnitude() {
            Some(m) => write!(f, "{}({m})", self.kind()),
            None => write!(f, "{}", self.kind()),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ActionRepr {
    action: String,
    mag: Option<f64>,
}

impl Serialize for Action {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ActionRepr {
            action: self.kind().name().to_string(),
            mag: self.magnitude(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = ActionRepr::deserialize(deserializer)?;
        Action::from_parts(&repr.action, repr.mag).map_err(serde::de::Error::custom)
    }
}

/// Pose after executing `action` with every noise term equal to zero and no
/// collision handling.
pub fn nominal_step(pose: AgentPose, action: Action) -> AgentPose {
    match action {
        Action::MoveForward(d) => AgentPose {
            x: pose.x + d * pose.theta.sin(),
            y: pose.y + d * pose.theta.cos(),
            theta: pose.theta,
        },
        Action::TurnLeft(a) => AgentPose::new(pose.x, pose.y, pose.theta - a),
        Action::TurnRight(a) => AgentPose::new(pose.x, pose.y, pose.theta + a),
        Action::Stop => pose,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_helpers() {
        assert_eq!(normalize_angle(-TURN_STEP), TAU - TURN_STEP);
        assert_eq!(normalize_angle(TAU), 0.0);
        assert!((angle_diff(0.1, TAU - 0.1) - 0.2).abs() < 1e-12);
        assert!((angle_diff(std::f64::consts::PI, 0.0) - std::f64::consts::PI).abs() < 1e-12);
        assert!((heading_to(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)) - TAU / 4.0).abs() < 1e-12);
        assert_eq!(heading_to(Point2::new(0.0, 0.0), Point2::new(0.0, 2.0)), 0.0);
    }

    #[test]
    fn nominal_kinematics() {
        let p = nominal_step(AgentPose::new(0.0, 0.0, 0.0), Action::FORWARD);
        assert_eq!((p.x, p.y, p.theta), (0.0, 0.25, 0.0));
        let p = nominal_step(AgentPose::new(0.0, 0.0, 0.0), Action::RIGHT);
        assert!((p.theta - 15f64.to_radians()).abs() < 1e-15);
        assert!((p.theta - 0.2618).abs() < 1e-4);
    }

    #[test]
    fn parts_and_descriptions() {
        assert_eq!(Action::from_parts("MoveForward", None).unwrap(), Action::FORWARD);
        assert_eq!(Action::from_parts("Stop", Some(3.0)).unwrap(), Action::Stop);
        assert!(Action::from_parts("Jump", None).is_err());
        assert!(Action::from_parts("TurnLeft", Some(-1.0)).is_err());
        assert_eq!(Action::MoveForward(0.75).describe(), "move forward 75 cm");
        assert_eq!(Action::TurnLeft(2.0 * TURN_STEP).describe(), "turn left 30 degrees");
        assert!(Action::LEFT.is_primitive());
        assert!(!Action::MoveForward(0.5).is_primitive());
        let json = serde_json::to_string(&Action::MoveForward(0.5)).unwrap();
        assert_eq!(json, r#"{"action":"MoveForward","mag":0.5}"#);
        let back: Action = serde_json::from_str(&json).unwrap();
        assert_eq!(back, Action::MoveForward(0.5));
    }
}
