//! Waypoint-to-region annotation and trajectory filtering.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::Episode;
use crate::geometry::{FloorPlan, Point2};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaypointLabel {
    pub index: usize,
    pub region_id: Option<u32>,
    pub region_type: Option<String>,
}

/// Regions visited by a trajectory.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionTrace {
    pub per_waypoint: Vec<WaypointLabel>,
    /// Consecutive repeats collapsed; waypoints outside every region are
    /// skipped.
    pub compressed: Vec<(u32, String)>,
}

impl RegionTrace {
    pub fn from_labels(per_waypoint: Vec<WaypointLabel>) -> Self {
        let mut compressed: Vec<(u32, String)> = Vec::new();
        for w in &per_waypoint {
            if let (Some(id), Some(t)) = (w.region_id, &w.region_type) {
                if compressed.last().map(|(last, _)| *last) != Some(id) {
                    compressed.push((id, t.clone()));
                }
            }
        }
        Self {
            per_waypoint,
            compressed,
        }
    }

    pub fn has_off_plan(&self) -> bool {
        self.per_waypoint.iter().any(|w| w.region_id.is_none())
    }

    pub fn revisits(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.compressed.iter().any(|(id, _)| !seen.insert(*id))
    }
}

pub fn annotate_trajectory(fp: &FloorPlan, waypoints: &[Point2]) -> RegionTrace {
    RegionTrace::from_labels(
        waypoints
            .iter()
            .enumerate()
            .map(|(index, &p)| {
                let r = fp.locate(p);
                WaypointLabel {
                    index,
                    region_id: r.map(|r| r.id),
                    region_type: r.map(|r| r.region_type.clone()),
                }
            })
            .collect(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionReason {
    /// Some waypoint lies in no region.
    OffPlan,
    /// The trajectory re-enters a region it already left.
    Revisit,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub kept: usize,
    pub rejected: BTreeMap<RejectionReason, usize>,
}

pub fn rejection_reason(trace: &RegionTrace) -> Option<RejectionReason> {
    if trace.has_off_plan() {
        Some(RejectionReason::OffPlan)
    } else if trace.revisits() {
        Some(RejectionReason::Revisit)
    } else {
        None
    }
}

/// Keeps episodes whose ground-truth path stays on the plan and never
/// revisits a region.
pub fn filter_episodes(episodes: Vec<Episode>, fp: &FloorPlan) -> (Vec<Episode>, FilterReport) {
    let mut report = FilterReport::default();
    let mut kept = Vec::new();
    for e in episodes {
        match rejection_reason(&annotate_trajectory(fp, &e.gt_path)) {
            Some(reason) => *report.rejected.entry(reason).or_insert(0) += 1,
            None => {
                report.kept += 1;
                kept.push(e);
            }
        }
    }
    (kept, report)
}
