//! On-disk artifact store with content-derived ids and atomic writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use fpnav_core::dataset::Episode;
use fpnav_core::eval::BenchmarkReport;
use fpnav_core::geometry::FloorPlan;

use crate::ServiceError;

pub const FLOORPLANS: &str = "floorplans";
pub const EPISODES: &str = "episodes";
pub const RUNS: &str = "runs";
pub const SESSIONS: &str = "sessions";

/// First 16 hex digits of the SHA-256 of `bytes`.
pub fn content_id(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn check_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.')
        && !id.starts_with('.')
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ServiceError> {
    let dir = path.parent().expect("store paths have a parent");
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| ServiceError::Io(e.error))?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoredEpisode {
    pub id: String,
    pub episode_id: String,
    pub floorplan: String,
}

/// Store rooted at a directory holding `floorplans/`, `episodes/`, `runs/`
/// and `sessions/`.
#[derive(Clone, Debug)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let root = root.into();
        for sub in [FLOORPLANS, EPISODES, RUNS, SESSIONS] {
            std::fs::create_dir_all(root.join(sub))?;
        }
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn file(&self, kind: &str, id: &str, ext: &str) -> Result<PathBuf, ServiceError> {
        if !check_id(id) {
            return Err(ServiceError::BadId(id.to_string()));
        }
        Ok(self.root.join(kind).join(format!("{id}.{ext}")))
    }

    /// Stores the canonical form of a plan; the id is derived from it, so
    /// uploading the same plan twice yields the same id.
    pub fn put_floorplan(&self, fp: &FloorPlan) -> Result<String, ServiceError> {
        let text = fp.to_json();
        let id = content_id(text.as_bytes());
        let path = self.file(FLOORPLANS, &id, "json")?;
        write_atomic(&path, text.as_bytes())?;
        FloorPlan::parse(&std::fs::read_to_string(&path)?)
            .map_err(|e| ServiceError::Corrupt(format!("{}: {e}", path.display())))?;
        Ok(id)
    }

    pub fn floorplan_text(&self, id: &str) -> Result<String, ServiceError> {
        let path = self.file(FLOORPLANS, id, "json")?;
        std::fs::read_to_string(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => ServiceError::UnknownFloorplan(id.to_string()),
            _ => ServiceError::Io(e),
        })
    }

    pub fn get_floorplan(&self, id: &str) -> Result<FloorPlan, ServiceError> {
        FloorPlan::parse(&self.floorplan_text(id)?)
            .map_err(|e| ServiceError::Corrupt(format!("floor plan {id}: {e}")))
    }

    fn list(&self, kind: &str, ext: &str) -> Result<Vec<String>, ServiceError> {
        let mut out = Vec::new();
        for entry in std::fs::read_dir(self.root.join(kind))? {
            let entry = entry?;
            let path = entry.path();
            if kind == RUNS {
                if path.is_dir() {
                    out.push(entry.file_name().to_string_lossy().into_owned());
                }
            } else if path.extension().and_then(|e| e.to_str()) == Some(ext) {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    out.push(stem.to_string());
                }
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn list_floorplans(&self) -> Result<Vec<String>, ServiceError> {
        self.list(FLOORPLANS, "json")
    }

    /// Stores an episode under an id derived from its canonical JSON.
    pub fn put_episode(&self, episode: &Episode) -> Result<String, ServiceError> {
        let text = episode.to_json();
        let id = content_id(text.as_bytes());
        let path = self.file(EPISODES, &id, "json")?;
        write_atomic(&path, text.as_bytes())?;
        Episode::parse(&std::fs::read_to_string(&path)?)
            .map_err(|e| ServiceError::Corrupt(format!("{}: {e}", path.display())))?;
        Ok(id)
    }

    pub fn get_episode(&self, id: &str) -> Result<Episode, ServiceError> {
        let path = self.file(EPISODES, id, "json")?;
        let text = std::fs::read_to_string(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => ServiceError::UnknownEpisode(id.to_string()),
            _ => ServiceError::Io(e),
        })?;
        Episode::parse(&text).map_err(|e| ServiceError::Corrupt(format!("episode {id}: {e}")))
    }

    pub fn list_episodes(&self) -> Result<Vec<StoredEpisode>, ServiceError> {
        self.list(EPISODES, "json")?
            .into_iter()
            .map(|id| {
                let e = self.get_episode(&id)?;
                Ok(StoredEpisode {
                    id,
                    episode_id: e.episode_id,
                    floorplan: e.floorplan,
                })
            })
            .collect()
    }

    pub fn run_dir(&self, id: &str) -> Result<PathBuf, ServiceError> {
        if !check_id(id) {
            return Err(ServiceError::BadId(id.to_string()));
        }
        Ok(self.root.join(RUNS).join(id))
    }

    /// Writes a benchmark report under an id derived from its summary.
    pub fn put_run(&self, report: &BenchmarkReport) -> Result<String, ServiceError> {
        let summary = serde_json::to_string(report)?;
        let id = content_id(summary.as_bytes());
        report.write_to(&self.run_dir(&id)?)?;
        BenchmarkReport::read_from(&self.run_dir(&id)?)?;
        Ok(id)
    }

    pub fn get_run(&self, id: &str) -> Result<BenchmarkReport, ServiceError> {
        let dir = self.run_dir(id)?;
        if !dir.join("summary.json").is_file() {
            return Err(ServiceError::UnknownRun(id.to_string()));
        }
        Ok(BenchmarkReport::read_from(&dir)?)
    }

    pub fn list_runs(&self) -> Result<Vec<String>, ServiceError> {
        self.list(RUNS, "")
    }

    pub fn session_path(&self, id: &str) -> Result<PathBuf, ServiceError> {
        self.file(SESSIONS, id, "json")
    }

    pub fn put_session_snapshot<T: Serialize>(&self, id: &str, snapshot: &T) -> Result<(), ServiceError> {
        let text = serde_json::to_string_pretty(snapshot)?;
        let path = self.session_path(id)?;
        write_atomic(&path, text.as_bytes())?;
        serde_json::from_str::<serde_json::Value>(&std::fs::read_to_string(&path)?)?;
        Ok(())
    }
}
