//! Action merging, decomposition, path compilation, class balancing and
//! frame sampling.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{DatasetError, QaRecord};
use crate::geometry::{FloorPlan, Point2};
use crate::simulator::{
    angle_diff, heading_to, nominal_step, Action, ActionKind, AgentPose, FORWARD_STEP, TURN_STEP,
};

/// Video length cap per record.
pub const MAX_VIDEO_FRAMES: usize = 6;
/// Forward moves stop once this close to the current waypoint.
pub const WAYPOINT_TOLERANCE: f64 = 0.5 * FORWARD_STEP;
/// Default floor for balancing, relative to the mean class frequency.
pub const DEFAULT_BALANCE_FLOOR: f64 = 0.5;

/// Sums maximal runs of same-kind actions. Stop is never merged.
pub fn merge_actions(seq: &[Action]) -> Vec<Action> {
    let mut out: Vec<Action> = Vec::with_capacity(seq.len());
    for &a in seq {
        match (out.last_mut(), a) {
            (Some(Action::MoveForward(m)), Action::MoveForward(d))
            | (Some(Action::TurnLeft(m)), Action::TurnLeft(d))
            | (Some(Action::TurnRight(m)), Action::TurnRight(d)) => *m += d,
            _ => out.push(a),
        }
    }
    out
}

/// Splits an action into primitives. Magnitudes that are not a whole number
/// of primitives are rounded to the nearest count, at least one.
pub fn decompose_action(a: Action) -> Vec<Action> {
    let Some(prim) = a.kind().primitive() else {
        return vec![Action::Stop];
    };
    let m = a.magnitude().unwrap_or(prim);
    let exact = m / prim;
    let count = (exact.round() as usize).max(1);
    if (exact - count as f64).abs() > 1e-6 {
        log::warn!("rounding {a} to {count} primitive(s)");
    }
    let unit = Action::with_kind(a.kind(), None).expect("primitive magnitude is valid");
    vec![unit; count]
}

pub fn decompose_actions(seq: &[Action]) -> Vec<Action> {
    seq.iter().flat_map(|&a| decompose_action(a)).collect()
}

/// Greedy turn-then-move compiler: before every forward primitive the agent
/// turns by the whole number of 15° steps closest to the bearing of the next
/// waypoint, then moves 0.25 m; a waypoint counts as reached within
/// [`WAYPOINT_TOLERANCE`]. Ends with Stop.
pub fn compile_path_to_actions(
    fp: &FloorPlan,
    start: AgentPose,
    path: &[Point2],
) -> Result<Vec<Action>, DatasetError> {
    let mut pose = start;
    let mut actions = Vec::new();
    for (i, &wp) in path.iter().enumerate() {
        if fp.locate(wp).is_none() {
            return Err(DatasetError::UnreachableWaypoint { index: i, point: wp });
        }
        let budget = 8 + 4 * (pose.position().distance(wp) / FORWARD_STEP).ceil() as usize;
        let mut moves = 0;
        while pose.position().distance(wp) > WAYPOINT_TOLERANCE {
            if moves >= budget {
                return Err(DatasetError::UnreachableWaypoint { index: i, point: wp });
            }
            let err = angle_diff(heading_to(pose.position(), wp), pose.theta);
            let turns = (err / TURN_STEP).round() as i64;
            let turn = if turns > 0 { Action::RIGHT } else { Action::LEFT };
            for _ in 0..turns.unsigned_abs() {
                pose = nominal_step(pose, turn);
                actions.push(turn);
            }
            pose = nominal_step(pose, Action::FORWARD);
            actions.push(Action::FORWARD);
            moves += 1;
        }
    }
    actions.push(Action::Stop);
    Ok(actions)
}

/// Poses before each action followed by the final pose, executed without
/// noise or collision handling.
pub fn nominal_poses(start: AgentPose, actions: &[Action]) -> Vec<AgentPose> {
    let mut poses = Vec::with_capacity(actions.len() + 1);
    poses.push(start);
    let mut pose = start;
    for &a in actions {
        for p in decompose_action(a) {
            pose = nominal_step(pose, p);
        }
        poses.push(pose);
    }
    poses
}

/// Up to `h` frame indices out of `frame_count`: first and last always kept,
/// the rest spread evenly with round-half-up.
pub fn sample_video_frames(frame_count: usize, h: usize) -> Vec<usize> {
    if frame_count <= h {
        return (0..frame_count).collect();
    }
    if h < 2 {
        return (0..h).collect();
    }
    let (t1, h1) = (frame_count - 1, h - 1);
    let mut out: Vec<usize> = (0..h).map(|k| (2 * k * t1 + h1) / (2 * h1)).collect();
    out.dedup();
    out
}

/// Action class counts before and after balancing.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub floor: f64,
    pub before: BTreeMap<String, usize>,
    pub after: BTreeMap<String, usize>,
}

fn action_class(r: &QaRecord) -> Option<ActionKind> {
    r.action.map(|a| a.kind())
}

pub fn action_histogram(records: &[QaRecord]) -> BTreeMap<String, usize> {
    let mut h = BTreeMap::new();
    for r in records {
        if let Some(k) = action_class(r) {
            *h.entry(k.name().to_string()).or_insert(0) += 1;
        }
    }
    h
}

/// Duplicates records of rare action classes, round-robin within a class,
/// until every present class has a share of at least `floor / K` of the
/// nav records, `K` being the number of present classes. Records are only
/// ever appended.
pub fn balance_actions(records: &[QaRecord], floor: f64) -> (Vec<QaRecord>, BalanceReport) {
    let before = action_histogram(records);
    let mut out = records.to_vec();
    let mut by_class: BTreeMap<ActionKind, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        if let Some(k) = action_class(r) {
            by_class.entry(k).or_default().push(i);
        }
    }
    let floor = floor.clamp(0.0, 1.0);
    if by_class.len() > 1 {
        let k = by_class.len() as f64;
        let mut counts: BTreeMap<ActionKind, usize> =
            by_class.iter().map(|(c, v)| (*c, v.len())).collect();
        let mut cursor: BTreeMap<ActionKind, usize> = BTreeMap::new();
        loop {
            let total: usize = counts.values().sum();
            let threshold = floor / k * total as f64;
            let lacking = counts
                .iter()
                .filter(|(_, &n)| (n as f64) < threshold - 1e-12)
                .min_by_key(|(c, &n)| (n, **c))
                .map(|(c, _)| *c);
            let Some(class) = lacking else { break };
            let pool = &by_class[&class];
            let at = cursor.entry(class).or_insert(0);
            out.push(records[pool[*at % pool.len()]].clone());
            *at += 1;
            *counts.get_mut(&class).expect("present class") += 1;
        }
    }
    let after = action_histogram(&out);
    (
        out,
        BalanceReport {
            floor,
            before,
            after,
        },
    )
}
