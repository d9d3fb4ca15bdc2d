//! Episode records and procedural episode generation.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::actions::compile_path_to_actions;
use super::catalog::stop_phrases;
use super::instruction::{gen_instruction, Instruction, TEMPLATE_COUNT};
use super::trace::{annotate_trajectory, rejection_reason};
use super::DatasetError;
use crate::eval::{GridMap, PlanContext};
use crate::geometry::{FloorPlan, Point2, Region};
use crate::simulator::{
    mix_seed, Action, AgentPose, EpisodeState, NoiseConfig, World, SUCCESS_DISTANCE, TURN_STEP,
};

/// One navigation task instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub episode_id: String,
    /// Path or id of the floor-plan document.
    pub floorplan: String,
    pub start_pose: AgentPose,
    pub goal: Point2,
    pub instruction: Instruction,
    pub gt_path: Vec<Point2>,
    #[serde(default)]
    pub gt_actions: Vec<Action>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
}

impl Episode {
    /// Canonical single-line JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("episode serializes")
    }

    pub fn parse(text: &str) -> Result<Self, DatasetError> {
        let e: Episode = serde_json::from_str(text)?;
        e.validate()?;
        Ok(e)
    }

    /// Structural checks that need no floor plan.
    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: &str| Err(DatasetError::InvalidEpisode(format!("{}: {m}", self.episode_id)));
        if self.episode_id.is_empty() {
            return bad("empty episode_id");
        }
        if !self.instruction.is_consistent() {
            return bad("instruction text does not match its fields");
        }
        match self.gt_path.first() {
            None => return bad("empty gt_path"),
            Some(p) if p.distance(self.start_pose.position()) > 1e-9 => {
                return bad("gt_path does not begin at the start position")
            }
            _ => {}
        }
        if self.gt_actions.iter().any(|a| !a.is_primitive()) {
            return bad("gt_actions must be primitive");
        }
        if let Some(n) = &self.noise {
            n.validate().map_err(|e| DatasetError::InvalidEpisode(e.to_string()))?;
        }
        Ok(())
    }

    /// Checks the episode against its floor plan: the goal lies in the final
    /// region of the path and, when actions are present, their noise-free
    /// replay passes within 0.25 m of every waypoint and ends within the
    /// success distance.
    pub fn validate_on(&self, world: &Arc<World>) -> Result<(), DatasetError> {
        self.validate()?;
        let bad = |m: String| Err(DatasetError::InvalidEpisode(format!("{}: {m}", self.episode_id)));
        let fp = &world.floorplan;
        let goal_region = fp.locate(self.goal).map(|r| r.id);
        let last_region = self.gt_path.last().and_then(|p| fp.locate(*p)).map(|r| r.id);
        if goal_region.is_none() || goal_region != last_region {
            return bad("goal is not in the final region of the path".into());
        }
        if self.gt_actions.is_empty() {
            return Ok(());
        }
        let poses = replay(world, self.start_pose, self.goal, &self.gt_actions)?;
        for (i, wp) in self.gt_path.iter().enumerate() {
            let near = poses.iter().any(|p| p.position().distance(*wp) <= 0.25 + 1e-9);
            if !near {
                return bad(format!("replay never comes within 0.25 m of waypoint {i}"));
            }
        }
        let end = poses.last().expect("replay has poses").position();
        if end.distance(self.goal) >= SUCCESS_DISTANCE {
            return bad("replay does not end within the success distance".into());
        }
        Ok(())
    }
}

/// True poses of a noise-free replay: the start pose, then one per action.
pub fn replay(
    world: &Arc<World>,
    start: AgentPose,
    goal: Point2,
    actions: &[Action],
) -> Result<Vec<AgentPose>, DatasetError> {
    let mut state = EpisodeState::reset(Arc::clone(world), start, goal, NoiseConfig::noiseless(0))?;
    for &a in actions {
        if state.is_terminated() {
            break;
        }
        state.step(a)?;
    }
    Ok(state.trajectory().to_vec())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeGenSpec {
    pub count: usize,
    pub seed: u64,
    /// Minimum straight-line start-goal distance in meters.
    pub min_distance: f64,
    /// Minimum number of regions the ground-truth path traverses.
    pub min_regions: usize,
    /// Start positions keep at least this much distance from walls.
    pub start_margin: f64,
    /// Maximum spacing between consecutive ground-truth waypoints.
    pub waypoint_spacing: f64,
    pub max_attempts: usize,
}

impl Default for EpisodeGenSpec {
    fn default() -> Self {
        Self {
            count: 10,
            seed: 0,
            min_distance: 4.0,
            min_regions: 3,
            start_margin: 0.4,
            waypoint_spacing: 0.5,
            max_attempts: 200,
        }
    }
}

fn sample_point_in(region: &Region, world: &World, margin: f64, rng: &mut ChaCha8Rng) -> Option<Point2> {
    let b = region.polygon.bounds();
    for _ in 0..64 {
        let p = Point2::new(rng.gen_range(b.min.x..=b.max.x), rng.gen_range(b.min.y..=b.max.y));
        if world.floorplan.locate(p).map(|r| r.id) == Some(region.id)
            && world.walls.min_distance(p) >= margin
        {
            return Some(p);
        }
    }
    None
}

/// Removes waypoints while the straight shortcut keeps the grid clearance.
fn shortcut(grid: &GridMap, points: &[Point2]) -> Vec<Point2> {
    let mut out = vec![points[0]];
    let mut i = 0;
    while i + 1 < points.len() {
        let mut j = i + 1;
        while j + 1 < points.len() && grid.segment_clear(points[i], points[j + 1]) {
            j += 1;
        }
        out.push(points[j]);
        i = j;
    }
    out
}

fn densify(points: &[Point2], spacing: f64) -> Vec<Point2> {
    let mut out = vec![points[0]];
    for w in points.windows(2) {
        let n = (w[0].distance(w[1]) / spacing).ceil().max(1.0) as usize;
        for k in 1..=n {
            out.push(w[0].lerp(w[1], k as f64 / n as f64));
        }
    }
    out
}

/// Attempts one episode between two regions; `None` when it violates any
/// generation rule.
fn try_episode(
    ctx: &PlanContext,
    spec: &EpisodeGenSpec,
    floorplan_ref: &str,
    episode_id: String,
    rng: &mut ChaCha8Rng,
) -> Option<Episode> {
    let world = ctx.world();
    let fp: &FloorPlan = &world.floorplan;
    let regions = fp.regions();
    if regions.len() < 2 {
        return None;
    }
    let a = rng.gen_range(0..regions.len());
    let mut b = rng.gen_range(0..regions.len() - 1);
    if b >= a {
        b += 1;
    }
    let (start_region, goal_region) = (&regions[a], &regions[b]);
    let start = sample_point_in(start_region, world, spec.start_margin, rng)?;
    let heading = rng.gen_range(0..24) as f64 * TURN_STEP;
    let goal = goal_region.anchor();
    if fp.locate(goal).map(|r| r.id) != Some(goal_region.id)
        || world.walls.min_distance(goal) < spec.start_margin
        || start.distance(goal) < spec.min_distance
    {
        return None;
    }
    let grid = ctx.guidance_grid();
    let (raw, _) = grid.shortest_path(start, goal)?;
    let gt_path = densify(&shortcut(grid, &raw), spec.waypoint_spacing);
    let trace = annotate_trajectory(fp, &gt_path);
    if rejection_reason(&trace).is_some()
        || trace.compressed.len() < spec.min_regions
        || trace.compressed.last().map(|(id, _)| *id) != Some(goal_region.id)
    {
        return None;
    }
    let start_pose = AgentPose::at(start, heading);
    let gt_actions = compile_path_to_actions(fp, start_pose, &gt_path[1..]).ok()?;
    let phrases = stop_phrases(&goal_region.region_type);
    let stop = phrases[rng.gen_range(0..phrases.len())];
    let template = rng.gen_range(0..TEMPLATE_COUNT);
    let instruction =
        gen_instruction(&trace, stop, template, goal_region.id, &goal_region.region_type).ok()?;
    let episode = Episode {
        episode_id,
        floorplan: floorplan_ref.to_string(),
        start_pose,
        goal,
        instruction,
        gt_path,
        gt_actions,
        noise: None,
    };
    episode.validate_on(world).ok()?;
    Some(episode)
}

/// Generates `spec.count` episodes on one plan. Each attempt draws from its
/// own seeded stream, so the output depends only on the plan and the spec.
pub fn gen_episodes(
    ctx: &PlanContext,
    floorplan_ref: &str,
    spec: &EpisodeGenSpec,
) -> Result<Vec<Episode>, DatasetError> {
    let scene = ctx.floorplan().scene_id().to_string();
    let mut out = Vec::with_capacity(spec.count);
    let mut attempt = 0u64;
    let budget = (spec.max_attempts.max(1) * spec.count.max(1)) as u64;
    while out.len() < spec.count {
        if attempt >= budget {
            return Err(DatasetError::GenerationExhausted {
                wanted: spec.count,
                produced: out.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.seed, attempt));
        attempt += 1;
        let id = format!("{scene}-{:04}", out.len());
        if let Some(e) = try_episode(ctx, spec, floorplan_ref, id, &mut rng) {
            out.push(e);
        }
    }
    Ok(out)
}
