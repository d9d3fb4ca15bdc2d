//! Dataset pipeline: procedural floor plans, episode generation, region
//! traces, instruction templates, action compilation, QA records and frame
//! export.

mod actions;
mod catalog;
mod episode;
mod export;
mod instruction;
mod procgen;
mod qa;
mod trace;

use thiserror::Error;

pub use actions::{
    action_histogram, balance_actions, compile_path_to_actions, decompose_action, decompose_actions,
    merge_actions, nominal_poses, sample_video_frames, BalanceReport, DEFAULT_BALANCE_FLOOR,
    MAX_VIDEO_FRAMES, WAYPOINT_TOLERANCE,
};
pub use catalog::{stop_phrases, CORRIDOR_TYPE, REGION_TYPES};
pub use episode::{gen_episodes, replay, Episode, EpisodeGenSpec};
pub use export::{export_dataset, ExportConfig, ExportLayout, Manifest, ManifestRecord};
pub use instruction::{
    gen_instruction, instruction_from_fields, nearest_template, parse_instruction, template_text,
    Instruction, TEMPLATE_COUNT,
};
pub use procgen::{gen_synthetic_floorplan, FloorPlanSpec, ROOM_GAP};
pub use qa::{
    frame_ref, gen_localization_qa, gen_nav_qa, gen_qa_corpus, gen_summarization_qa,
    gen_trajectory_reasoning_qa, EpisodeContext, QaRecord, QaTask, ReasoningTarget, Stage,
};
pub use trace::{
    annotate_trajectory, filter_episodes, rejection_reason, FilterReport, RegionTrace,
    RejectionReason, WaypointLabel,
};

use crate::geometry::Point2;
use crate::render::RenderError;
use crate::simulator::SimError;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("infeasible floor-plan spec: {0}")]
    InfeasibleSpec(String),
    #[error("waypoint {index} at {point} cannot be reached by discrete actions")]
    UnreachableWaypoint { index: usize, point: Point2 },
    #[error("unknown template id {0}")]
    UnknownTemplate(usize),
    #[error("invalid instruction: {0}")]
    InvalidInstruction(String),
    #[error("instruction does not match any template; nearest is {nearest} ({similarity:.2}): {nearest_text}")]
    InstructionParse {
        text: String,
        nearest: usize,
        nearest_text: String,
        similarity: f64,
    },
    #[error("region trace is empty")]
    EmptyTrace,
    #[error("invalid episode: {0}")]
    InvalidEpisode(String),
    #[error("produced {produced} of {wanted} episodes before running out of attempts")]
    GenerationExhausted { wanted: usize, produced: usize },
    #[error("step {step} out of range for {frames} frames")]
    StepOutOfRange { step: usize, frames: usize },
    #[error("pose {0} lies outside every region")]
    PoseOutsideRegions(Point2),
    #[error("unknown export layout `{0}`")]
    InvalidLayout(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
