//! Navigation and auxiliary-task QA records.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::actions::{merge_actions, sample_video_frames, MAX_VIDEO_FRAMES};
use super::episode::{replay, Episode};
use super::trace::{annotate_trajectory, RegionTrace};
use super::DatasetError;
use crate::geometry::{FloorPlan, Point2};
use crate::simulator::{mix_seed, Action, ActionKind, AgentPose, World};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QaTask {
    Nav,
    RegionLocalization,
    TrajectoryReasoning,
    InstructionSummarization,
}

impl std::str::FromStr for QaTask {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nav" => Ok(QaTask::Nav),
            "region_localization" | "localization" => Ok(QaTask::RegionLocalization),
            "trajectory_reasoning" | "reasoning" => Ok(QaTask::TrajectoryReasoning),
            "instruction_summarization" | "summarization" => Ok(QaTask::InstructionSummarization),
            other => Err(format!("unknown QA task `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Initialization,
    Navigation,
    Termination,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QaRecord {
    pub task: QaTask,
    pub episode_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    pub prompt: String,
    pub frames: Vec<String>,
    pub target: String,
    /// Free-form scene caption; left empty by this pipeline.
    #[serde(default)]
    pub caption: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<Action>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<Stage>,
}

/// Reference to the frame recorded before action `step`.
pub fn frame_ref(episode_id: &str, step: usize) -> String {
    format!("{episode_id}/frames/{step:05}.png")
}

/// An episode with its noise-free replay and region trace.
#[derive(Clone, Debug)]
pub struct EpisodeContext {
    pub episode: Episode,
    pub world: Arc<World>,
    /// Start pose followed by one pose per action.
    pub poses: Vec<AgentPose>,
    pub trace: RegionTrace,
}

impl EpisodeContext {
    pub fn new(episode: Episode, world: Arc<World>) -> Result<Self, DatasetError> {
        let poses = replay(&world, episode.start_pose, episode.goal, &episode.gt_actions)?;
        let positions: Vec<Point2> = poses.iter().map(|p| p.position()).collect();
        let trace = annotate_trajectory(&world.floorplan, &positions);
        Ok(Self {
            episode,
            world,
            poses,
            trace,
        })
    }

    /// One frame per action, showing the pose before it.
    pub fn frame_count(&self) -> usize {
        self.episode.gt_actions.len().max(1)
    }

    fn history_frames(&self, t: usize) -> Vec<String> {
        sample_video_frames(t + 1, MAX_VIDEO_FRAMES)
            .into_iter()
            .map(|k| frame_ref(&self.episode.episode_id, k))
            .collect()
    }

    fn check_step(&self, t: usize) -> Result<(), DatasetError> {
        if t >= self.frame_count() {
            return Err(DatasetError::StepOutOfRange {
                step: t,
                frames: self.frame_count(),
            });
        }
        Ok(())
    }
}

fn label(id: u32, region_type: &str) -> String {
    format!("{region_type} {id}")
}

pub fn gen_localization_qa(ctx: &EpisodeContext, t: usize) -> Result<QaRecord, DatasetError> {
    ctx.check_step(t)?;
    let p = ctx.poses[t].position();
    let region = ctx
        .world
        .floorplan
        .locate(p)
        .ok_or(DatasetError::PoseOutsideRegions(p))?;
    Ok(QaRecord {
        task: QaTask::RegionLocalization,
        episode_id: ctx.episode.episode_id.clone(),
        step: Some(t),
        prompt: "Describe the current observation and name the type of region you are in."
            .to_string(),
        frames: ctx.history_frames(t),
        target: format!("The current region is {}.", region.region_type),
        caption: None,
        action: None,
        stage: None,
    })
}

/// Structured answer of a trajectory-reasoning record.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasoningTarget {
    pub stage: Stage,
    pub visited: Vec<(u32, String)>,
    pub current: (u32, String),
    pub next: Option<(u32, String)>,
    pub stop_condition: Option<String>,
}

impl ReasoningTarget {
    /// `positions` are the poses up to and including step `t`, `full` the
    /// trace of the whole ground-truth trajectory.
    pub fn compute(
        fp: &FloorPlan,
        positions: &[Point2],
        full: &RegionTrace,
        goal_region: u32,
        stop_condition: &str,
    ) -> Result<Self, DatasetError> {
        let prefix = annotate_trajectory(fp, positions);
        let last = *positions.last().ok_or(DatasetError::EmptyTrace)?;
        let current = fp
            .locate(last)
            .map(|r| (r.id, r.region_type.clone()))
            .ok_or(DatasetError::PoseOutsideRegions(last))?;
        let stage = if prefix.compressed.len() <= 1 {
            Stage::Initialization
        } else if current.0 == goal_region {
            Stage::Termination
        } else {
            Stage::Navigation
        };
        let next = full.compressed.get(prefix.compressed.len()).cloned();
        Ok(match stage {
            Stage::Initialization => Self {
                stage,
                visited: Vec::new(),
                current,
                next,
                stop_condition: None,
            },
            Stage::Navigation => Self {
                stage,
                visited: prefix.compressed,
                current,
                next,
                stop_condition: None,
            },
            Stage::Termination => Self {
                stage,
                visited: prefix.compressed,
                current,
                next: None,
                stop_condition: Some(stop_condition.to_string()),
            },
        })
    }

    pub fn render(&self) -> String {
        let mut parts = Vec::new();
        if !self.visited.is_empty() {
            let v: Vec<String> = self.visited.iter().map(|(i, t)| label(*i, t)).collect();
            parts.push(format!("Visited regions: {}.", v.join(", ")));
        }
        parts.push(format!(
            "Current region: {}.",
            label(self.current.0, &self.current.1)
        ));
        match (&self.stop_condition, &self.next) {
            (Some(stop), _) => parts.push(format!("Stop condition: {stop}.")),
            (None, Some((i, t))) => parts.push(format!("Next region: {}.", label(*i, t))),
            (None, None) => parts.push("Next region: none.".to_string()),
        }
        parts.join(" ")
    }
}

pub fn gen_trajectory_reasoning_qa(
    ctx: &EpisodeContext,
    t: usize,
) -> Result<QaRecord, DatasetError> {
    ctx.check_step(t)?;
    let fp = &ctx.world.floorplan;
    let goal = ctx.episode.goal;
    let goal_region = fp
        .locate(goal)
        .map(|r| r.id)
        .ok_or(DatasetError::PoseOutsideRegions(goal))?;
    let positions: Vec<Point2> = ctx.poses[..=t].iter().map(|p| p.position()).collect();
    let target = ReasoningTarget::compute(
        fp,
        &positions,
        &ctx.trace,
        goal_region,
        &ctx.episode.instruction.stop_condition,
    )?;
    Ok(QaRecord {
        task: QaTask::TrajectoryReasoning,
        episode_id: ctx.episode.episode_id.clone(),
        step: Some(t),
        prompt: format!(
            "Instruction: {} Summarize the regions visited so far, the current region and what comes next.",
            ctx.episode.instruction.rendered
        ),
        frames: ctx.history_frames(t),
        target: target.render(),
        caption: None,
        action: None,
        stage: Some(target.stage),
    })
}

pub fn gen_summarization_qa(ctx: &EpisodeContext) -> QaRecord {
    QaRecord {
        task: QaTask::InstructionSummarization,
        episode_id: ctx.episode.episode_id.clone(),
        step: None,
        prompt: "Reconstruct the concise instruction this trajectory follows.".to_string(),
        frames: sample_video_frames(ctx.frame_count(), MAX_VIDEO_FRAMES)
            .into_iter()
            .map(|k| frame_ref(&ctx.episode.episode_id, k))
            .collect(),
        target: ctx.episode.instruction.rendered.clone(),
        caption: None,
        action: None,
        stage: None,
    }
}

/// One record per merged action; the record's step is the frame where that
/// action begins.
pub fn gen_nav_qa(ctx: &EpisodeContext) -> Vec<QaRecord> {
    let actions = &ctx.episode.gt_actions;
    let mut out = Vec::new();
    let mut i = 0;
    while i < actions.len() {
        let kind = actions[i].kind();
        let mut j = i + 1;
        if kind != ActionKind::Stop {
            while j < actions.len() && actions[j].kind() == kind {
                j += 1;
            }
        }
        let merged = merge_actions(&actions[i..j])[0];
        out.push(QaRecord {
            task: QaTask::Nav,
            episode_id: ctx.episode.episode_id.clone(),
            step: Some(i),
            prompt: format!(
                "Instruction: {} What is the next action?",
                ctx.episode.instruction.rendered
            ),
            frames: ctx.history_frames(i),
            target: format!("The next action is {}.", merged.describe()),
            caption: None,
            action: Some(merged),
            stage: None,
        });
        i = j;
    }
    out
}

/// Records of one task for every episode. Auxiliary tasks draw
/// `per_episode` steps uniformly with a seeded stream per episode.
pub fn gen_qa_corpus(
    contexts: &[EpisodeContext],
    task: QaTask,
    per_episode: usize,
    seed: u64,
) -> Result<Vec<QaRecord>, DatasetError> {
    let mut out = Vec::new();
    for (i, ctx) in contexts.iter().enumerate() {
        match task {
            QaTask::Nav => out.extend(gen_nav_qa(ctx)),
            QaTask::InstructionSummarization => out.push(gen_summarization_qa(ctx)),
            QaTask::RegionLocalization | QaTask::TrajectoryReasoning => {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, i as u64));
                for _ in 0..per_episode {
                    let t = rng.gen_range(0..ctx.frame_count());
                    out.push(if task == QaTask::RegionLocalization {
                        gen_localization_qa(ctx, t)?
                    } else {
                        gen_trajectory_reasoning_qa(ctx, t)?
                    });
                }
            }
        }
    }
    Ok(out)
}
