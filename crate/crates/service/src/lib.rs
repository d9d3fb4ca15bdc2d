//! Artifact store and HTTP session API.
//!
//! The store keeps floor plans, episodes, benchmark runs and session
//! snapshots under one root directory. The API serves plans and rasters,
//! runs interactive sessions that return dual-view frames by reference, and
//! streams per-step session events.

mod api;
mod session;
mod store;

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use thiserror::Error;

use fpnav_core::geometry::Point2;

pub use api::{router, serve, AppState, ServeConfig, STORE_ENV};
pub use session::{
    CreateSession, Session, SessionEvent, SessionSnapshot, SessionStatus, SessionView, StepRequest,
    DEFAULT_SESSION_STEPS,
};
pub use store::{content_id, write_atomic, Store, StoredEpisode, EPISODES, FLOORPLANS, RUNS, SESSIONS};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown floor plan `{0}`")]
    UnknownFloorplan(String),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("unknown episode `{0}`")]
    UnknownEpisode(String),
    #[error("unknown run `{0}`")]
    UnknownRun(String),
    #[error("malformed id `{0}`")]
    BadId(String),
    #[error("instruction does not match any template; nearest is template {nearest}: {nearest_text}")]
    InstructionParse {
        nearest: usize,
        nearest_text: String,
        similarity: f64,
    },
    #[error("instruction does not fit the plan: {0}")]
    InvalidInstruction(String),
    #[error("start pose {0} is not in free space")]
    PoseInvalid(Point2),
    #[error("invalid noise: {0}")]
    InvalidNoise(String),
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("invalid floor-plan document: {0}")]
    InvalidDocument(String),
    #[error("session `{0}` has stopped")]
    SessionStopped(String),
    #[error("session `{0}` is still running")]
    SessionRunning(String),
    #[error("recorded episode is invalid: {0}")]
    EpisodeInvalid(String),
    #[error("stored artifact is corrupt: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Sim(#[from] fpnav_core::simulator::SimError),
    #[error(transparent)]
    Render(#[from] fpnav_core::render::RenderError),
    #[error(transparent)]
    Eval(#[from] fpnav_core::eval::EvalError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ServiceError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownFloorplan(_) => "unknown_floorplan",
            ServiceError::UnknownSession(_) => "unknown_session",
            ServiceError::UnknownEpisode(_) => "unknown_episode",
            ServiceError::UnknownRun(_) => "unknown_run",
            ServiceError::BadId(_) => "bad_id",
            ServiceError::InstructionParse { .. } => "instruction_parse",
            ServiceError::InvalidInstruction(_) => "instruction_invalid",
            ServiceError::PoseInvalid(_) => "pose_invalid",
            ServiceError::InvalidNoise(_) => "noise_invalid",
            ServiceError::InvalidAction(_) => "action_invalid",
            ServiceError::InvalidDocument(_) => "document_invalid",
            ServiceError::SessionStopped(_) => "session_stopped",
            ServiceError::SessionRunning(_) => "session_running",
            ServiceError::EpisodeInvalid(_) => "episode_invalid",
            ServiceError::Corrupt(_)
            | ServiceError::Sim(_)
            | ServiceError::Render(_)
            | ServiceError::Eval(_)
            | ServiceError::Json(_)
            | ServiceError::Io(_) => "internal",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::UnknownFloorplan(_)
            | ServiceError::UnknownSession(_)
            | ServiceError::UnknownEpisode(_)
            | ServiceError::UnknownRun(_) => StatusCode::NOT_FOUND,
            ServiceError::BadId(_) | ServiceError::InvalidAction(_) | ServiceError::InvalidDocument(_) => {
                StatusCode::BAD_REQUEST
            }
            ServiceError::InstructionParse { .. }
            | ServiceError::InvalidInstruction(_)
            | ServiceError::PoseInvalid(_)
            | ServiceError::InvalidNoise(_)
            | ServiceError::EpisodeInvalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::SessionStopped(_) | ServiceError::SessionRunning(_) => StatusCode::CONFLICT,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Serialize)]
struct ErrorBody {
    code: &'static str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    nearest_template: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nearest_text: Option<String>,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            log::error!("{self}");
        }
        let (nearest_template, nearest_text) = match &self {
            ServiceError::InstructionParse {
                nearest,
                nearest_text,
                ..
            } => (Some(*nearest), Some(nearest_text.clone())),
            _ => (None, None),
        };
        let body = ErrorBody {
            code: self.code(),
            message: self.to_string(),
            nearest_template,
            nearest_text,
        };
        (status, Json(body)).into_response()
    }
}
