//! `fpnav` command-line front end.

mod io;
mod ops;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fpnav_core::simulator::NoiseConfig;

#[derive(Parser)]
#[command(name = "fpnav", version, about = "Floor-plan guided navigation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Noise flags shared by commands that run the simulator.
#[derive(Args, Clone, Debug, Default)]
pub struct NoiseArgs {
    /// Relative forward-step error std.
    #[arg(long, default_value_t = 0.0)]
    pub sigma_move: f64,
    /// Turn error std in radians.
    #[arg(long, default_value_t = 0.0)]
    pub sigma_rot: f64,
    /// Heading drift std per forward step in radians. Defaults to 0.1 x sigma-move.
    #[arg(long)]
    pub sigma_drift: Option<f64>,
    /// Map scale error std.
    #[arg(long, default_value_t = 0.0)]
    pub sigma_scale: f64,
    /// Plan vertex jitter std in meters.
    #[arg(long, default_value_t = 0.0)]
    pub sigma_jitter: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl NoiseArgs {
    pub fn config(&self) -> NoiseConfig {
        let base = NoiseConfig::actuation(self.sigma_move, self.sigma_rot, self.seed);
        NoiseConfig {
            sigma_drift: self.sigma_drift.unwrap_or(base.sigma_drift),
            sigma_scale: self.sigma_scale,
            sigma_jitter: self.sigma_jitter,
            ..base
        }
    }

    pub fn any_set(&self) -> bool {
        !self.config().is_noiseless()
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a procedural floor plan document.
    GenFloorplan {
        #[arg(long, default_value_t = 6)]
        rooms: usize,
        #[arg(long, default_value_t = 3.0)]
        min_room: f64,
        #[arg(long, default_value_t = 5.0)]
        max_room: f64,
        #[arg(long, default_value_t = 1.6)]
        corridor_width: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        scene_id: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate episodes on a floor plan into a directory.
    GenEpisodes {
        #[arg(long)]
        floorplan: PathBuf,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4.0)]
        min_distance: f64,
        #[arg(long, default_value_t = 3)]
        min_regions: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print region traces and optionally copy episodes that pass the filter.
    Annotate {
        #[arg(long)]
        episodes: PathBuf,
        /// Directory receiving the episodes that pass the filter.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a QA corpus as line-delimited JSON.
    QaGen {
        #[arg(long)]
        episodes: PathBuf,
        /// nav, region_localization, trajectory_reasoning or instruction_summarization.
        #[arg(long)]
        task: String,
        #[arg(long, default_value_t = 4)]
        per_episode: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Balance nav records so each action class reaches this share of the mean.
        #[arg(long)]
        balance: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render frames for every episode in one of four layouts.
    Export {
        #[arg(long)]
        episodes: PathBuf,
        /// dual_view, dual_stream, interleaved or static_separate.
        #[arg(long, default_value = "dual_view")]
        layout: String,
        #[arg(long)]
        ppm: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Action and trajectory-length histograms.
    Stats {
        #[arg(long)]
        episodes: PathBuf,
        /// QA corpus whose nav action distribution is added to the report.
        #[arg(long)]
        qa: Option<PathBuf>,
        /// Trajectory-length bin width in meters.
        #[arg(long, default_value_t = 2.0)]
        bin: f64,
    },
    /// Rasterize a floor plan with an optional trajectory and pose overlay.
    Render {
        #[arg(long)]
        floorplan: PathBuf,
        /// Trajectory log (line-delimited JSON records).
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// Draw the believed instead of the true poses from the log.
        #[arg(long)]
        believed: bool,
        /// Current pose as x,y,theta.
        #[arg(long)]
        pose: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Grey out this fraction of the plan width.
        #[arg(long)]
        mask: Option<f64>,
        #[arg(long, default_value_t = 0)]
        mask_seed: u64,
        #[arg(long)]
        ppm: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay an episode's actions and report the outcome.
    Replay {
        #[arg(long)]
        episode: PathBuf,
        #[command(flatten)]
        noise: NoiseArgs,
        /// Trajectory log output.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Directory receiving one dual-view frame per step.
        #[arg(long)]
        frames: Option<PathBuf>,
    },
    /// Run a policy over an episode set and write results.
    Run {
        #[arg(long)]
        episodes: PathBuf,
        /// oracle, deadreck, random or external.
        #[arg(long, default_value = "oracle")]
        policy: String,
        /// Shell command for the external policy.
        #[arg(long)]
        command: Option<String>,
        #[command(flatten)]
        noise: NoiseArgs,
        /// Comma-separated seeds; each runs every episode once.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        /// full, mask:<fraction> or random.
        #[arg(long, default_value = "full")]
        plan_mode: String,
        /// euclidean or geodesic.
        #[arg(long, default_value = "euclidean")]
        distance: String,
        #[arg(long)]
        max_steps: Option<usize>,
        /// Preset grid instead of a single cell: actuation, plan-usage, scale or jitter.
        #[arg(long)]
        preset: Option<String>,
        /// Extra floor plans (directory of documents) for random-plan substitution.
        #[arg(long)]
        plan_pool: Option<PathBuf>,
        #[arg(long)]
        label: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the results table of a finished run.
    Eval {
        #[arg(long)]
        results: PathBuf,
        #[arg(long, default_value = "md")]
        table: String,
    },
    /// Serve the HTTP session API.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, env = fpnav_service::STORE_ENV, default_value = "fpnav-store")]
        store_root: PathBuf,
    },
}

fn dispatch(cli: Cli) -> ops::Result<()> {
    match cli.command {
        Command::GenFloorplan {
            rooms,
            min_room,
            max_room,
            corridor_width,
            seed,
            scene_id,
            out,
        } => ops::gen_floorplan(rooms, min_room, max_room, corridor_width, seed, scene_id, &out),
        Command::GenEpisodes {
            floorplan,
            count,
            seed,
            min_distance,
            min_regions,
            out,
        } => ops::gen_episodes(&floorplan, count, seed, min_distance, min_regions, &out),
        Command::Annotate { episodes, out } => ops::annotate(&episodes, out.as_deref()),
        Command::QaGen {
            episodes,
            task,
            per_episode,
            seed,
            balance,
            out,
        } => ops::qa_gen(&episodes, &task, per_episode, seed, balance, &out),
        Command::Export {
            episodes,
            layout,
            ppm,
            out,
        } => ops::export(&episodes, &layout, ppm, &out),
        Command::Stats { episodes, qa, bin } => ops::stats(&episodes, qa.as_deref(), bin),
        Command::Render {
            floorplan,
            trajectory,
            believed,
            pose,
            alpha,
            mask,
            mask_seed,
            ppm,
            out,
        } => ops::render(ops::RenderArgs {
            floorplan,
            trajectory,
            believed,
            pose,
            alpha,
            mask,
            mask_seed,
            ppm,
            out,
        }),
        Command::Replay {
            episode,
            noise,
            log,
            frames,
        } => ops::replay(&episode, &noise, log.as_deref(), frames.as_deref()),
        Command::Run {
            episodes,
            policy,
            command,
            noise,
            seeds,
            plan_mode,
            distance,
            max_steps,
            preset,
            plan_pool,
            label,
            out,
        } => ops::run(ops::RunArgs {
            episodes,
            policy,
            command,
            noise,
            seeds,
            plan_mode,
            distance,
            max_steps,
            preset,
            plan_pool,
            label,
            out,
        }),
        Command::Eval { results, table } => ops::eval(&results, &table),
        Command::Serve {
            host,
            port,
            store_root,
        } => ops::serve(host, port, store_root),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
