//! Episode execution under ablations and the parallel benchmark runner.

use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{summarize, GoalDistance, MetricsSummary, TableFormat};
use super::planner::{DistanceField, GridMap, MaskRect, Planner, PLANNING_RESOLUTION};
use super::policy::{
    ExternalPolicy, GuidedPolicy, Policy, PolicyKind, PolicySpec, PoseSource, RandomPolicy,
    POLICY_CLEARANCE,
};
use super::EvalError;
use crate::dataset::decompose_action;
use crate::geometry::{extract_walls_with_tolerance, FloorPlan, Point2};
use crate::simulator::{
    jitter_floorplan, keyed_rng, mix_seed, Action, AgentPose, DistanceMode, EpisodeResult,
    EpisodeState, NoiseConfig, NoiseDomain, World, WALL_CLEARANCE,
};

/// Step cap per episode, including the forced Stop.
pub const DEFAULT_MAX_STEPS: usize = 500;

/// A floor plan with lazily built planning lattices, shared across episodes.
#[derive(Debug)]
pub struct PlanContext {
    world: Arc<World>,
    planning: OnceLock<Arc<GridMap>>,
    guidance: OnceLock<Arc<GridMap>>,
}

impl PlanContext {
    pub fn new(floorplan: FloorPlan) -> Self {
        Self::from_world(Arc::new(World::new(floorplan)))
    }

    pub fn from_world(world: Arc<World>) -> Self {
        Self {
            world,
            planning: OnceLock::new(),
            guidance: OnceLock::new(),
        }
    }

    pub fn world(&self) -> &Arc<World> {
        &self.world
    }

    pub fn floorplan(&self) -> &FloorPlan {
        &self.world.floorplan
    }

    /// Lattice at the simulator clearance, used for reference path lengths.
    pub fn planning_grid(&self) -> &Arc<GridMap> {
        self.planning.get_or_init(|| {
            Arc::new(GridMap::for_world(&self.world, PLANNING_RESOLUTION, WALL_CLEARANCE))
        })
    }

    /// Lattice at the policy clearance.
    pub fn guidance_grid(&self) -> &Arc<GridMap> {
        self.guidance.get_or_init(|| {
            Arc::new(GridMap::for_world(&self.world, PLANNING_RESOLUTION, POLICY_CLEARANCE))
        })
    }

    pub fn planner(&self) -> Planner<'_> {
        Planner::with_grid(&self.world, Arc::clone(self.planning_grid()))
    }
}

/// Goal field on `grid`, falling back to the simulator clearance when the
/// wider policy margin disconnects start and goal.
fn guidance_field(
    grid: &Arc<GridMap>,
    fallback: impl FnOnce() -> Arc<GridMap>,
    start: Point2,
    goal: Point2,
) -> Arc<DistanceField> {
    let field = grid.distance_field(goal);
    if field.is_reachable_from(start) {
        return Arc::new(field);
    }
    let wide = fallback().distance_field(goal);
    if wide.is_reachable_from(start) {
        Arc::new(wide)
    } else {
        Arc::new(field)
    }
}

/// One navigation problem: a plan, start pose and goal point.
#[derive(Debug)]
pub struct NavTask {
    pub episode_id: String,
    pub plan: Arc<PlanContext>,
    pub start: AgentPose,
    pub goal: Point2,
    pub instruction: Option<String>,
    reference_length: f64,
    guidance: OnceLock<Arc<DistanceField>>,
    geodesic: OnceLock<Arc<DistanceField>>,
}

impl NavTask {
    /// Validates endpoints and computes the reference shortest path length.
    pub fn new(
        episode_id: impl Into<String>,
        plan: Arc<PlanContext>,
        start: AgentPose,
        goal: Point2,
    ) -> Result<Self, EvalError> {
        let reference_length = plan.planner().shortest_path_length(start.position(), goal)?;
        Ok(Self {
            episode_id: episode_id.into(),
            plan,
            start,
            goal,
            instruction: None,
            reference_length,
            guidance: OnceLock::new(),
            geodesic: OnceLock::new(),
        })
    }

    pub fn with_instruction(mut self, instruction: impl Into<String>) -> Self {
        self.instruction = Some(instruction.into());
        self
    }

    pub fn reference_length(&self) -> f64 {
        self.reference_length
    }

    /// Goal field on the true plan used by the guided policies.
    pub fn guidance_field(&self) -> &Arc<DistanceField> {
        self.guidance.get_or_init(|| {
            guidance_field(
                self.plan.guidance_grid(),
                || Arc::clone(self.plan.planning_grid()),
                self.start.position(),
                self.goal,
            )
        })
    }

    /// Goal field at the simulator clearance, for geodesic distances.
    pub fn geodesic_field(&self) -> &Arc<DistanceField> {
        self.geodesic
            .get_or_init(|| Arc::new(self.plan.planning_grid().distance_field(self.goal)))
    }
}

/// How the plan given to the policy differs from the true plan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PlanMode {
    Full,
    /// A full-height band covering this fraction of the plan width is unknown.
    MaskFraction(f64),
    /// A different scene's plan is substituted.
    RandomPlan,
}

impl fmt::Display for PlanMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanMode::Full => f.write_str("full"),
            PlanMode::MaskFraction(x) => write!(f, "mask:{x}"),
            PlanMode::RandomPlan => f.write_str("random"),
        }
    }
}

impl std::str::FromStr for PlanMode {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(PlanMode::Full),
            "random" | "random_plan" => Ok(PlanMode::RandomPlan),
            _ => {
                let f = s
                    .strip_prefix("mask:")
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| EvalError::InvalidAblation(format!("unknown plan mode `{s}`")))?;
                if !(0.0..=1.0).contains(&f) {
                    return Err(EvalError::InvalidAblation(format!(
                        "mask fraction {f} outside [0, 1]"
                    )));
                }
                Ok(PlanMode::MaskFraction(f))
            }
        }
    }
}

impl Serialize for PlanMode {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PlanMode {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One cell of the ablation grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationSpec {
    pub label: String,
    pub plan_mode: PlanMode,
    pub noise: NoiseConfig,
    /// Each seed runs every episode once.
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub distance_mode: DistanceMode,
}

impl AblationSpec {
    pub fn new(label: impl Into<String>, plan_mode: PlanMode, noise: NoiseConfig) -> Self {
        let seeds = vec![noise.seed];
        Self {
            label: label.into(),
            plan_mode,
            noise,
            seeds,
            distance_mode: DistanceMode::Euclidean,
        }
    }

    pub fn with_seeds(mut self, seeds: Vec<u64>) -> Self {
        self.seeds = seeds;
        self
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if let PlanMode::MaskFraction(f) = self.plan_mode {
            if !(0.0..=1.0).contains(&f) {
                return Err(EvalError::InvalidAblation(format!("mask fraction {f} outside [0, 1]")));
            }
        }
        if self.seeds.is_empty() {
            return Err(EvalError::InvalidAblation("at least one seed is required".into()));
        }
        self.noise.validate()?;
        Ok(())
    }
}

/// Per-episode record written to the benchmark log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub cell: String,
    pub episode_id: String,
    pub seed: u64,
    pub success: bool,
    pub oracle_success: bool,
    pub ne: f64,
    pub path_length: f64,
    pub shortest_path_length: f64,
    pub steps: usize,
    pub final_pose: AgentPose,
    pub scale_alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

/// Full output of one simulated episode.
#[derive(Clone, Debug)]
pub struct EpisodeRun {
    pub result: EpisodeResult,
    pub state: EpisodeState,
    pub diagnostic: Option<String>,
}

/// Full-height band covering `fraction` of the plan width at a seeded
/// horizontal offset. `None` for a zero fraction.
pub fn mask_rect(fp: &FloorPlan, fraction: f64, seed: u64) -> Option<MaskRect> {
    if fraction <= 0.0 {
        return None;
    }
    let b = fp.bounds();
    let width = b.width() * fraction;
    let slack = (b.width() - width).max(0.0);
    let x0 = b.min.x + keyed_rng(seed, NoiseDomain::Ablation, 0, 0).gen::<f64>() * slack;
    Some(MaskRect {
        min: Point2::new(x0, b.min.y),
        max: Point2::new(x0 + width, b.max.y),
    })
}

fn substitute_plan(
    task: &NavTask,
    pool: &[Arc<PlanContext>],
    seed: u64,
) -> Result<Arc<PlanContext>, EvalError> {
    let own = task.plan.floorplan();
    let others: Vec<&Arc<PlanContext>> = pool
        .iter()
        .filter(|c| {
            !Arc::ptr_eq(c, &task.plan)
                && (c.floorplan().scene_id() != own.scene_id()
                    || c.floorplan().floor_id() != own.floor_id())
        })
        .collect();
    if others.is_empty() {
        return Err(EvalError::NoAlternativePlan);
    }
    let pick = keyed_rng(seed, NoiseDomain::Ablation, 0, 1).gen_range(0..others.len());
    Ok(Arc::clone(others[pick]))
}

/// Goal field for the dead-reckoning policy on the plan it is given.
fn effective_field(
    task: &NavTask,
    plan_mode: PlanMode,
    noise: &NoiseConfig,
    pool: &[Arc<PlanContext>],
) -> Result<Arc<DistanceField>, EvalError> {
    let (ctx, mask) = match plan_mode {
        PlanMode::Full => (Arc::clone(&task.plan), None),
        PlanMode::MaskFraction(f) => (
            Arc::clone(&task.plan),
            mask_rect(task.plan.floorplan(), f, noise.seed),
        ),
        PlanMode::RandomPlan => (substitute_plan(task, pool, noise.seed)?, None),
    };
    let start = task.start.position();
    if mask.is_none() && noise.sigma_jitter == 0.0 {
        if Arc::ptr_eq(&ctx, &task.plan) {
            return Ok(Arc::clone(task.guidance_field()));
        }
        return Ok(guidance_field(
            ctx.guidance_grid(),
            || Arc::clone(ctx.planning_grid()),
            start,
            task.goal,
        ));
    }
    let (fp, walls) = if noise.sigma_jitter > 0.0 {
        let fp = jitter_floorplan(ctx.floorplan(), noise.sigma_jitter, noise.seed);
        // Jittered neighbors no longer share edges exactly; widen the match
        // so doorways survive.
        let walls = extract_walls_with_tolerance(&fp, (4.0 * noise.sigma_jitter).max(1e-6));
        (fp, walls)
    } else {
        (ctx.floorplan().clone(), ctx.world().walls.clone())
    };
    let grid = Arc::new(GridMap::with_mask(
        &fp,
        &walls,
        PLANNING_RESOLUTION,
        POLICY_CLEARANCE,
        mask,
    ));
    Ok(guidance_field(
        &grid,
        || {
            Arc::new(GridMap::with_mask(
                &fp,
                &walls,
                PLANNING_RESOLUTION,
                WALL_CLEARANCE,
                mask,
            ))
        },
        start,
        task.goal,
    ))
}

fn build_policy(
    task: &NavTask,
    spec: &PolicySpec,
    plan_mode: PlanMode,
    noise: &NoiseConfig,
    pool: &[Arc<PlanContext>],
) -> Result<Box<dyn Policy>, EvalError> {
    Ok(match spec.kind {
        PolicyKind::OracleClosedLoop => Box::new(GuidedPolicy::new(
            Arc::clone(task.guidance_field()),
            PoseSource::True,
            spec.replan_period,
        )),
        PolicyKind::DeadReckoning => Box::new(GuidedPolicy::new(
            effective_field(task, plan_mode, noise, pool)?,
            PoseSource::Believed,
            spec.replan_period,
        )),
        PolicyKind::Random => Box::new(RandomPolicy::new(mix_seed(spec.seed, noise.seed))),
        PolicyKind::External => Box::new(ExternalPolicy::spawn(
            spec.command.as_deref().unwrap_or_default(),
            task.instruction.clone(),
        )?),
    })
}

/// Drives `policy` until it stops or the step cap forces a Stop. Composite
/// actions are decomposed into primitives first.
pub fn drive(
    state: &mut EpisodeState,
    policy: &mut dyn Policy,
    max_steps: usize,
) -> Result<(), EvalError> {
    let cap = max_steps.max(1);
    while !state.is_terminated() {
        if state.step_count() + 1 >= cap {
            state.step(Action::Stop)?;
            break;
        }
        let action = policy.act(state)?;
        for primitive in decompose_action(action) {
            if state.step_count() + 1 >= cap && primitive != Action::Stop {
                break;
            }
            state.step(primitive)?;
            if state.is_terminated() {
                break;
            }
        }
    }
    Ok(())
}

/// Runs one episode. `noise.seed` keys every random draw of the episode,
/// including mask placement and plan substitution.
pub fn run_episode(
    task: &NavTask,
    spec: &PolicySpec,
    plan_mode: PlanMode,
    noise: &NoiseConfig,
    distance_mode: DistanceMode,
    pool: &[Arc<PlanContext>],
) -> Result<EpisodeRun, EvalError> {
    spec.validate()?;
    let mut policy = build_policy(task, spec, plan_mode, noise, pool)?;
    let mut state = EpisodeState::reset(
        Arc::clone(task.plan.world()),
        task.start,
        task.goal,
        noise.clone(),
    )?;
    drive(&mut state, policy.as_mut(), spec.max_steps)?;
    let metric = match distance_mode {
        DistanceMode::Euclidean => GoalDistance::Euclidean(task.goal),
        DistanceMode::Geodesic => GoalDistance::Geodesic(task.geodesic_field()),
    };
    let result = state.result(task.reference_length, |p| metric.measure(p))?;
    Ok(EpisodeRun {
        result,
        state,
        diagnostic: policy.diagnostic().map(str::to_string),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub label: String,
    pub plan_mode: PlanMode,
    pub noise: NoiseConfig,
    pub summary: MetricsSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub policy: PolicySpec,
    pub rows: Vec<BenchmarkRow>,
    #[serde(skip)]
    pub episodes: Vec<EpisodeLog>,
}

impl BenchmarkReport {
    pub fn row(&self, label: &str) -> Option<&BenchmarkRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn table(&self, format: TableFormat) -> String {
        format_table(&self.rows, format)
    }

    /// Writes `summary.json`, `episodes.jsonl`, `table.md` and `table.csv`.
    pub fn write_to(&self, dir: &Path) -> Result<(), EvalError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(self)? + "\n")?;
        let mut log = String::new();
        for e in &self.episodes {
            log.push_str(&serde_json::to_string(e)?);
            log.push('\n');
        }
        fs::write(dir.join("episodes.jsonl"), log)?;
        fs::write(dir.join("table.md"), self.table(TableFormat::Md))?;
        fs::write(dir.join("table.csv"), self.table(TableFormat::Csv))?;
        Ok(())
    }

    /// Reads a report previously written by [`BenchmarkReport::write_to`].
    pub fn read_from(dir: &Path) -> Result<Self, EvalError> {
        let mut report: BenchmarkReport =
            serde_json::from_str(&fs::read_to_string(dir.join("summary.json"))?)?;
        let log = dir.join("episodes.jsonl");
        if log.exists() {
            for line in fs::read_to_string(log)?.lines().filter(|l| !l.trim().is_empty()) {
                report.episodes.push(serde_json::from_str(line)?);
            }
        }
        Ok(report)
    }
}

fn fmt_ne(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.2}")
    } else {
        "inf".to_string()
    }
}

fn pct(v: f64) -> String {
    format!("{:.1}", 100.0 * v)
}

/// Result table with columns NE, OSR, SR, SPL (rates in percent).
pub fn format_table(rows: &[BenchmarkRow], format: TableFormat) -> String {
    let mut out = String::new();
    match format {
        TableFormat::Md => {
            out.push_str("| Setting | NE | OSR | SR | SPL |\n");
            out.push_str("|---|---:|---:|---:|---:|\n");
            for r in rows {
                let s = &r.summary;
                out.push_str(&format!(
                    "| {} | {} | {} | {} | {} |\n",
                    r.label,
                    fmt_ne(s.ne_mean),
                    pct(s.osr),
                    pct(s.sr),
                    pct(s.spl)
                ));
            }
        }
        TableFormat::Csv => {
            out.push_str("setting,NE,OSR,SR,SPL\n");
            for r in rows {
                let s = &r.summary;
                let label = if r.label.contains([',', '"']) {
                    format!("\"{}\"", r.label.replace('"', "\"\""))
                } else {
                    r.label.clone()
                };
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    label,
                    fmt_ne(s.ne_mean),
                    pct(s.osr),
                    pct(s.sr),
                    pct(s.spl)
                ));
            }
        }
    }
    out
}

/// Runs every task under every ablation cell and seed. Episodes run in
/// parallel; results are collected in (cell, seed, task) order so output is
/// deterministic.
pub fn run_benchmark(
    tasks: &[NavTask],
    pool: &[Arc<PlanContext>],
    policy: &PolicySpec,
    cells: &[AblationSpec],
) -> Result<BenchmarkReport, EvalError> {
    if tasks.is_empty() {
        return Err(EvalError::EmptyEpisodes);
    }
    policy.validate()?;
    let mut rows = Vec::new();
    let mut episodes = Vec::new();
    for cell in cells {
        cell.validate()?;
        let jobs: Vec<(u64, usize)> = cell
            .seeds
            .iter()
            .flat_map(|&s| (0..tasks.len()).map(move |i| (s, i)))
            .collect();
        let runs: Vec<Result<(EpisodeResult, EpisodeLog), EvalError>> = jobs
            .par_iter()
            .map(|&(seed, i)| {
                let task = &tasks[i];
                let episode_seed = mix_seed(seed, i as u64);
                let noise = cell.noise.clone().with_seed(episode_seed);
                let run = run_episode(task, policy, cell.plan_mode, &noise, cell.distance_mode, pool)?;
                let r = &run.result;
                let log = EpisodeLog {
                    cell: cell.label.clone(),
                    episode_id: task.episode_id.clone(),
                    seed: episode_seed,
                    success: r.success,
                    oracle_success: r.oracle_success,
                    ne: r.ne,
                    path_length: r.path_length,
                    shortest_path_length: r.shortest_path_length,
                    steps: r.steps,
                    final_pose: r.final_pose,
                    scale_alpha: run.state.scale_alpha(),
                    diagnostic: run.diagnostic.clone(),
                };
                let mut result = run.result;
                result.trajectory.clear();
                Ok((result, log))
            })
            .collect();
        let mut results = Vec::with_capacity(runs.len());
        for run in runs {
            let (result, log) = run?;
            results.push(result);
            episodes.push(log);
        }
        rows.push(BenchmarkRow {
            label: cell.label.clone(),
            plan_mode: cell.plan_mode,
            noise: cell.noise.clone(),
            summary: summarize(&results)?,
        });
    }
    Ok(BenchmarkReport {
        policy: policy.clone(),
        rows,
        episodes,
    })
}
