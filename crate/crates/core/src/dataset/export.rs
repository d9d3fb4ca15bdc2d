//! Frame export in four layouts plus a manifest of per-episode frame order.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::qa::{frame_ref, EpisodeContext};
use super::DatasetError;
use crate::render::{
    overlay_pose_trajectory, raycast_observation, render_dual_view, render_floorplan, save_png,
    RasterConfig, RaycastConfig,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportLayout {
    /// One static plan image per episode and a separate observation stream.
    StaticSeparate,
    /// Parallel observation and plan-overlay streams.
    DualStream,
    /// A single list alternating observation and plan-overlay frames.
    Interleaved,
    /// Composed side-by-side frames.
    DualView,
}

impl ExportLayout {
    pub const ALL: [ExportLayout; 4] = [
        ExportLayout::StaticSeparate,
        ExportLayout::DualStream,
        ExportLayout::Interleaved,
        ExportLayout::DualView,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExportLayout::StaticSeparate => "static_separate",
            ExportLayout::DualStream => "dual_stream",
            ExportLayout::Interleaved => "interleaved",
            ExportLayout::DualView => "dual_view",
        }
    }
}

impl fmt::Display for ExportLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExportLayout {
    type Err = DatasetError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| DatasetError::InvalidLayout(s.to_string()))
    }
}

/// Frame lists for one episode, relative to the export root.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub episode_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub frames: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub obs_frames: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub plan_frames: Vec<String>,
}

impl ManifestRecord {
    /// Every frame path the record references, plan first.
    pub fn all_frames(&self) -> Vec<&str> {
        self.plan
            .iter()
            .chain(&self.frames)
            .chain(&self.obs_frames)
            .chain(&self.plan_frames)
            .map(String::as_str)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub layout: ExportLayout,
    pub records: Vec<ManifestRecord>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExportConfig {
    pub raster: RasterConfig,
    pub raycast: RaycastConfig,
}

fn obs_ref(id: &str, k: usize) -> String {
    format!("{id}/obs/{k:05}.png")
}

fn plan_ref(id: &str, k: usize) -> String {
    format!("{id}/plan/{k:05}.png")
}

/// Renders frame `k` of an episode for every stream the layout needs.
fn export_step(
    ctx: &EpisodeContext,
    raster: &crate::render::PlanRaster,
    layout: ExportLayout,
    cfg: &ExportConfig,
    out_dir: &Path,
    k: usize,
) -> Result<(), DatasetError> {
    let id = &ctx.episode.episode_id;
    let pose = ctx.poses[k.min(ctx.poses.len() - 1)];
    let history = &ctx.poses[..k.min(ctx.poses.len() - 1)];
    match layout {
        ExportLayout::DualView => {
            let frame = render_dual_view(&ctx.world, raster, history, pose, 1.0, k, &cfg.raycast)?;
            save_png(&frame.image, &out_dir.join(frame_ref(id, k)))?;
        }
        _ => {
            let obs = raycast_observation(&ctx.world, pose, &cfg.raycast, &cfg.raster)?;
            save_png(&obs.image, &out_dir.join(obs_ref(id, k)))?;
            if layout != ExportLayout::StaticSeparate {
                let plan = overlay_pose_trajectory(raster, history, pose, 1.0);
                save_png(&plan, &out_dir.join(plan_ref(id, k)))?;
            }
        }
    }
    Ok(())
}

/// Writes frames for every episode and `manifest.json` under `out_dir`.
/// Frame `k` shows the pose before action `k`.
pub fn export_dataset(
    contexts: &[EpisodeContext],
    layout: ExportLayout,
    out_dir: &Path,
    cfg: &ExportConfig,
) -> Result<Manifest, DatasetError> {
    std::fs::create_dir_all(out_dir)?;
    let mut records = Vec::with_capacity(contexts.len());
    for ctx in contexts {
        let id = &ctx.episode.episode_id;
        let raster = render_floorplan(&ctx.world.floorplan, &cfg.raster)?;
        let n = ctx.frame_count();
        (0..n)
            .into_par_iter()
            .try_for_each(|k| export_step(ctx, &raster, layout, cfg, out_dir, k))?;
        let mut rec = ManifestRecord {
            episode_id: id.clone(),
            ..Default::default()
        };
        match layout {
            ExportLayout::StaticSeparate => {
                let plan = format!("{id}/plan.png");
                save_png(&raster.image, &out_dir.join(&plan))?;
                rec.plan = Some(plan);
                rec.obs_frames = (0..n).map(|k| obs_ref(id, k)).collect();
            }
            ExportLayout::DualStream => {
                rec.obs_frames = (0..n).map(|k| obs_ref(id, k)).collect();
                rec.plan_frames = (0..n).map(|k| plan_ref(id, k)).collect();
            }
            ExportLayout::Interleaved => {
                rec.frames = (0..n).flat_map(|k| [obs_ref(id, k), plan_ref(id, k)]).collect();
            }
            ExportLayout::DualView => {
                rec.frames = (0..n).map(|k| frame_ref(id, k)).collect();
            }
        }
        records.push(rec);
    }
    let manifest = Manifest { layout, records };
    std::fs::write(out_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}
