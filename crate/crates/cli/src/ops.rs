//! Subcommand implementations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::json;

use fpnav_core::dataset::{
    action_histogram, annotate_trajectory, balance_actions, export_dataset, gen_episodes as generate,
    gen_qa_corpus, gen_synthetic_floorplan, merge_actions, rejection_reason, EpisodeContext,
    EpisodeGenSpec, ExportConfig, ExportLayout, FloorPlanSpec, QaRecord, QaTask,
};
use fpnav_core::eval::{
    mask_rect, run_benchmark, AblationSpec, BenchmarkReport, PlanMode, PolicyKind, PolicySpec,
    TableFormat,
};
use fpnav_core::geometry::FloorPlan;
use fpnav_core::render::{
    mask_raster, overlay_pose_trajectory, render_dual_view, render_floorplan, save_png, PlanRaster,
    RasterConfig, RaycastConfig,
};
use fpnav_core::simulator::{AgentPose, DistanceMode, EpisodeState, NoiseConfig, TrajectoryRecord};

use crate::io::{load_episodes, load_floorplan, load_plan_dir, write_jsonl};
use crate::NoiseArgs;

pub type Result<T> = std::result::Result<T, Box<dyn std::error::Error>>;

fn print_json(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

pub fn gen_floorplan(
    rooms: usize,
    min_room: f64,
    max_room: f64,
    corridor_width: f64,
    seed: u64,
    scene_id: Option<String>,
    out: &Path,
) -> Result<()> {
    let fp = gen_synthetic_floorplan(&FloorPlanSpec {
        room_count: rooms,
        min_room_size: min_room,
        max_room_size: max_room,
        corridor_width,
        seed,
        scene_id,
    })?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(out, fp.to_json())?;
    log::info!("wrote {} regions to {}", fp.regions().len(), out.display());
    Ok(())
}

/// Episodes go to `<out>/<episode_id>.json`; the plan is copied to
/// `<out>/floorplans/` and referenced relative to `out`.
pub fn gen_episodes(
    floorplan: &Path,
    count: usize,
    seed: u64,
    min_distance: f64,
    min_regions: usize,
    out: &Path,
) -> Result<()> {
    let fp = load_floorplan(floorplan)?;
    let plan_ref = format!("floorplans/{}_{}.json", fp.scene_id(), fp.floor_id());
    std::fs::create_dir_all(out.join("floorplans"))?;
    std::fs::write(out.join(&plan_ref), fp.to_json())?;
    let ctx = fpnav_core::eval::PlanContext::new(fp);
    let spec = EpisodeGenSpec {
        count,
        seed,
        min_distance,
        min_regions,
        ..Default::default()
    };
    let episodes = generate(&ctx, &plan_ref, &spec)?;
    for e in &episodes {
        std::fs::write(out.join(format!("{}.json", e.episode_id)), e.to_json())?;
    }
    log::info!("wrote {} episodes to {}", episodes.len(), out.display());
    Ok(())
}

pub fn annotate(episodes: &Path, out: Option<&Path>) -> Result<()> {
    let loaded = load_episodes(episodes)?;
    let mut kept = 0;
    let mut rejected: BTreeMap<String, usize> = BTreeMap::new();
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
    }
    for (e, ctx) in loaded.episodes.iter().zip(&loaded.plans) {
        let trace = annotate_trajectory(ctx.floorplan(), &e.gt_path);
        let reason = rejection_reason(&trace);
        println!(
            "{}",
            json!({
                "episode_id": e.episode_id,
                "compressed": trace.compressed,
                "rejected": reason,
            })
        );
        match reason {
            Some(r) => *rejected.entry(format!("{r:?}")).or_default() += 1,
            None => {
                kept += 1;
                if let Some(dir) = out {
                    std::fs::write(dir.join(format!("{}.json", e.episode_id)), e.to_json())?;
                    copy_plan_ref(episodes, dir, &e.floorplan)?;
                }
            }
        }
    }
    log::info!("kept {kept}, rejected {rejected:?}");
    Ok(())
}

/// Copies a relative plan reference next to filtered episodes.
fn copy_plan_ref(src: &Path, dst: &Path, reference: &str) -> Result<()> {
    let rel = PathBuf::from(reference);
    if rel.is_absolute() || !src.is_dir() {
        return Ok(());
    }
    let from = src.join(&rel);
    let to = dst.join(&rel);
    if from.is_file() && !to.exists() {
        if let Some(dir) = to.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::copy(from, to)?;
    }
    Ok(())
}

fn contexts(episodes: &Path) -> Result<Vec<EpisodeContext>> {
    let loaded = load_episodes(episodes)?;
    loaded
        .episodes
        .into_iter()
        .zip(&loaded.plans)
        .map(|(e, ctx)| Ok(EpisodeContext::new(e, Arc::clone(ctx.world()))?))
        .collect()
}

pub fn qa_gen(
    episodes: &Path,
    task: &str,
    per_episode: usize,
    seed: u64,
    balance: Option<f64>,
    out: &Path,
) -> Result<()> {
    let task: QaTask = task.parse()?;
    let ctxs = contexts(episodes)?;
    let mut records: Vec<QaRecord> = gen_qa_corpus(&ctxs, task, per_episode, seed)?;
    if let Some(floor) = balance {
        if task != QaTask::Nav {
            return Err("--balance applies to nav records only".into());
        }
        let (balanced, report) = balance_actions(&records, floor);
        log::info!("balance before {:?} after {:?}", report.before, report.after);
        records = balanced;
    }
    write_jsonl(out, &records)?;
    log::info!("wrote {} records to {}", records.len(), out.display());
    Ok(())
}

pub fn export(episodes: &Path, layout: &str, ppm: Option<f64>, out: &Path) -> Result<()> {
    let layout: ExportLayout = layout.parse()?;
    let ctxs = contexts(episodes)?;
    let mut cfg = ExportConfig::default();
    if let Some(p) = ppm {
        cfg.raster.pixels_per_meter = p;
    }
    let manifest = export_dataset(&ctxs, layout, out, &cfg)?;
    let frames: usize = manifest.records.iter().map(|r| r.all_frames().len()).sum();
    log::info!("exported {} episodes ({frames} frame references) to {}", manifest.records.len(), out.display());
    Ok(())
}

fn histogram(values: impl Iterator<Item = f64>, bin: f64) -> BTreeMap<String, usize> {
    let mut bins: BTreeMap<u64, usize> = BTreeMap::new();
    for v in values {
        *bins.entry((v / bin).floor().max(0.0) as u64).or_default() += 1;
    }
    bins.into_iter()
        .map(|(k, n)| {
            let lo = k as f64 * bin;
            (format!("{:06.2}-{:06.2}", lo, lo + bin), n)
        })
        .collect()
}

pub fn stats(episodes: &Path, qa: Option<&Path>, bin: f64) -> Result<()> {
    if !(bin > 0.0) {
        return Err("--bin must be positive".into());
    }
    let ctxs = contexts(episodes)?;
    let mut merged_actions: BTreeMap<String, usize> = BTreeMap::new();
    let mut primitive_actions: BTreeMap<String, usize> = BTreeMap::new();
    for c in &ctxs {
        for a in &c.episode.gt_actions {
            *primitive_actions.entry(a.kind().name().to_string()).or_default() += 1;
        }
        for a in merge_actions(&c.episode.gt_actions) {
            *merged_actions.entry(a.kind().name().to_string()).or_default() += 1;
        }
    }
    let lengths = ctxs.iter().map(|c| {
        c.episode
            .gt_path
            .windows(2)
            .map(|w| w[0].distance(w[1]))
            .sum::<f64>()
    });
    let mut regions: BTreeMap<usize, usize> = BTreeMap::new();
    for c in &ctxs {
        *regions.entry(c.trace.compressed.len()).or_default() += 1;
    }
    let mut report = json!({
        "episodes": ctxs.len(),
        "primitive_actions": primitive_actions,
        "merged_actions": merged_actions,
        "trajectory_length_m": histogram(lengths, bin),
        "regions_traversed": regions,
    });
    if let Some(path) = qa {
        let text = std::fs::read_to_string(path)?;
        let records: Vec<QaRecord> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<_, _>>()?;
        report["qa_records"] = json!(records.len());
        report["qa_actions"] = json!(action_histogram(&records));
    }
    print_json(&report)
}

pub struct RenderArgs {
    pub floorplan: PathBuf,
    pub trajectory: Option<PathBuf>,
    pub believed: bool,
    pub pose: Option<String>,
    pub alpha: f64,
    pub mask: Option<f64>,
    pub mask_seed: u64,
    pub ppm: Option<f64>,
    pub out: PathBuf,
}

fn parse_pose(text: &str) -> Result<AgentPose> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| format!("pose `{text}`: {e}"))?;
    match parts.as_slice() {
        [x, y, theta] => Ok(AgentPose::new(*x, *y, *theta)),
        _ => Err(format!("pose `{text}` must be x,y,theta").into()),
    }
}

fn raster_for(fp: &FloorPlan, ppm: Option<f64>) -> Result<PlanRaster> {
    let mut cfg = RasterConfig::default();
    if let Some(p) = ppm {
        cfg.pixels_per_meter = p;
    }
    Ok(render_floorplan(fp, &cfg)?)
}

pub fn render(args: RenderArgs) -> Result<()> {
    let fp = load_floorplan(&args.floorplan)?;
    let mut raster = raster_for(&fp, args.ppm)?;
    if let Some(f) = args.mask {
        if let Some(m) = mask_rect(&fp, f, args.mask_seed) {
            raster.image = mask_raster(&raster, m.min, m.max);
        }
    }
    let mut poses: Vec<AgentPose> = Vec::new();
    if let Some(path) = &args.trajectory {
        let text = std::fs::read_to_string(path)?;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let rec: TrajectoryRecord = serde_json::from_str(line)?;
            poses.push(if args.believed { rec.believed_pose } else { rec.true_pose });
        }
    }
    let current = match &args.pose {
        Some(p) => Some(parse_pose(p)?),
        None => poses.pop(),
    };
    let image = match current {
        Some(pose) => overlay_pose_trajectory(&raster, &poses, pose, args.alpha),
        None => raster.image.clone(),
    };
    save_png(&image, &args.out)?;
    log::info!("wrote {}", args.out.display());
    Ok(())
}

pub fn replay(episode: &Path, noise: &NoiseArgs, log_path: Option<&Path>, frames: Option<&Path>) -> Result<()> {
    let loaded = load_episodes(episode)?;
    let (e, ctx) = (&loaded.episodes[0], &loaded.plans[0]);
    let config = if noise.any_set() {
        noise.config()
    } else {
        e.noise.unwrap_or_else(|| NoiseConfig::noiseless(noise.seed))
    };
    let mut state = EpisodeState::reset(Arc::clone(ctx.world()), e.start_pose, e.goal, config)?;
    for &a in &e.gt_actions {
        if state.is_terminated() {
            break;
        }
        state.step(a)?;
    }
    if !state.is_terminated() {
        state.step(fpnav_core::simulator::Action::Stop)?;
    }
    if let Some(path) = log_path {
        write_jsonl(path, &state.log_records())?;
    }
    if let Some(dir) = frames {
        let raster = raster_for(ctx.floorplan(), None)?;
        let ray = RaycastConfig::default();
        let traj = state.trajectory();
        let believed = state.believed_trajectory();
        for k in 0..state.step_count() {
            let frame = render_dual_view(
                ctx.world(),
                &raster,
                &believed[..k],
                believed[k],
                state.scale_alpha(),
                k,
                &ray,
            );
            // The plan overlay follows the believed pose; the view follows the true pose.
            let frame = match frame {
                Ok(f) if traj[k] == believed[k] => f,
                _ => {
                    let obs = fpnav_core::render::raycast_observation(ctx.world(), traj[k], &ray, &raster.config)?;
                    let plan = overlay_pose_trajectory(&raster, &believed[..k], believed[k], state.scale_alpha());
                    fpnav_core::render::compose_dual_view(&obs.image, &plan, k)?
                }
            };
            save_png(&frame.image, &dir.join(format!("frames/{k:05}.png")))?;
        }
    }
    let result = state.result(0.0, |p| p.distance(e.goal))?;
    print_json(&json!({
        "episode_id": e.episode_id,
        "success": result.success,
        "ne": result.ne,
        "oracle_success": result.oracle_success,
        "path_length": result.path_length,
        "steps": result.steps,
        "final_pose": result.final_pose,
        "noise": config,
    }))
}

pub struct RunArgs {
    pub episodes: PathBuf,
    pub policy: String,
    pub command: Option<String>,
    pub noise: NoiseArgs,
    pub seeds: Vec<u64>,
    pub plan_mode: String,
    pub distance: String,
    pub max_steps: Option<usize>,
    pub preset: Option<String>,
    pub plan_pool: Option<PathBuf>,
    pub label: Option<String>,
    pub out: PathBuf,
}

/// Named grids matching the noise and plan-usage sweeps.
pub fn preset_cells(name: &str, seeds: &[u64]) -> Result<Vec<AblationSpec>> {
    let cell = |label: String, mode: PlanMode, noise: NoiseConfig| {
        AblationSpec::new(label, mode, noise).with_seeds(seeds.to_vec())
    };
    let cells = match name {
        "actuation" => [(0.0, 0.0), (0.1, 0.05), (0.3, 0.1), (0.5, 0.3)]
            .into_iter()
            .map(|(m, r)| {
                cell(
                    format!("sigma_move={m:.2}, sigma_rot={r:.2}"),
                    PlanMode::Full,
                    NoiseConfig::actuation(m, r, 0),
                )
            })
            .collect(),
        "scale" => [0.0, 0.01, 0.03, 0.05]
            .into_iter()
            .map(|s| {
                cell(
                    format!("sigma_scale={s:.2}"),
                    PlanMode::Full,
                    NoiseConfig {
                        sigma_scale: s,
                        ..NoiseConfig::default()
                    },
                )
            })
            .collect(),
        "jitter" => [0.0, 0.005, 0.01, 0.03]
            .into_iter()
            .map(|s| {
                cell(
                    format!("sigma_jitter={s:.3}"),
                    PlanMode::Full,
                    NoiseConfig {
                        sigma_jitter: s,
                        ..NoiseConfig::default()
                    },
                )
            })
            .collect(),
        "plan-usage" => {
            let modes = [
                ("full floorplan", PlanMode::Full),
                ("mask 25%", PlanMode::MaskFraction(0.25)),
                ("mask 50%", PlanMode::MaskFraction(0.5)),
                ("mask 75%", PlanMode::MaskFraction(0.75)),
                ("mask 100%", PlanMode::MaskFraction(1.0)),
                ("random floorplan", PlanMode::RandomPlan),
            ];
            modes
                .into_iter()
                .map(|(l, m)| cell(l.to_string(), m, NoiseConfig::default()))
                .collect()
        }
        other => return Err(format!("unknown preset `{other}`").into()),
    };
    Ok(cells)
}

pub fn run(args: RunArgs) -> Result<()> {
    let loaded = load_episodes(&args.episodes)?;
    let tasks = loaded
        .episodes
        .iter()
        .zip(&loaded.plans)
        .map(|(e, ctx)| {
            Ok(fpnav_core::eval::NavTask::new(
                e.episode_id.clone(),
                Arc::clone(ctx),
                e.start_pose,
                e.goal,
            )?
            .with_instruction(e.instruction.rendered.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pool = loaded.pool.clone();
    if let Some(dir) = &args.plan_pool {
        pool.extend(load_plan_dir(dir)?);
    }
    let kind: PolicyKind = args.policy.parse()?;
    let mut policy = PolicySpec::new(kind);
    policy.seed = args.noise.seed;
    policy.command = args.command.clone();
    if let Some(m) = args.max_steps {
        policy = policy.with_max_steps(m);
    }
    let seeds = if args.seeds.is_empty() {
        vec![args.noise.seed]
    } else {
        args.seeds.clone()
    };
    let distance = match args.distance.as_str() {
        "euclidean" => DistanceMode::Euclidean,
        "geodesic" => DistanceMode::Geodesic,
        other => return Err(format!("unknown distance mode `{other}`").into()),
    };
    let mut cells = match &args.preset {
        Some(name) => preset_cells(name, &seeds)?,
        None => {
            let mode: PlanMode = args.plan_mode.parse()?;
            let label = args.label.clone().unwrap_or_else(|| mode.to_string());
            vec![AblationSpec::new(label, mode, args.noise.config()).with_seeds(seeds.clone())]
        }
    };
    for c in &mut cells {
        c.distance_mode = distance;
    }
    let report = run_benchmark(&tasks, &pool, &policy, &cells)?;
    report.write_to(&args.out)?;
    print!("{}", report.table(TableFormat::Md));
    log::info!("wrote results to {}", args.out.display());
    Ok(())
}

pub fn eval(results: &Path, table: &str) -> Result<()> {
    let format: TableFormat = table.parse()?;
    let report = BenchmarkReport::read_from(results)?;
    print!("{}", report.table(format));
    Ok(())
}

pub fn serve(host: String, port: u16, store_root: PathBuf) -> Result<()> {
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(fpnav_service::serve(fpnav_service::ServeConfig {
        host,
        port,
        store_root,
    }))?;
    Ok(())
}
