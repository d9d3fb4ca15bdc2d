//! Side-by-side observation and plan frames.

use image::imageops::{self, FilterType};
use image::RgbImage;

use super::plan::{overlay_pose_trajectory, PlanRaster};
use super::raycast::{raycast_observation, RaycastConfig};
use super::RenderError;
use crate::simulator::{AgentPose, World};

#[derive(Clone, Debug, PartialEq)]
pub struct DualViewFrame {
    pub image: RgbImage,
    pub observation_width: u32,
    pub floorplan_width: u32,
    pub timestamp_step: usize,
}

/// Observation on the left, plan on the right. The observation is resized
/// with nearest-neighbor sampling to the plan height, keeping its aspect.
pub fn compose_dual_view(
    obs: &RgbImage,
    plan_view: &RgbImage,
    timestamp_step: usize,
) -> Result<DualViewFrame, RenderError> {
    if obs.width() == 0 || obs.height() == 0 || plan_view.width() == 0 || plan_view.height() == 0 {
        return Err(RenderError::ZeroSize);
    }
    let h = plan_view.height();
    let left = if obs.height() == h {
        obs.clone()
    } else {
        let w = ((obs.width() as f64 * h as f64 / obs.height() as f64).round() as u32).max(1);
        imageops::resize(obs, w, h, FilterType::Nearest)
    };
    let mut image = RgbImage::new(left.width() + plan_view.width(), h);
    imageops::replace(&mut image, &left, 0, 0);
    imageops::replace(&mut image, plan_view, left.width() as i64, 0);
    Ok(DualViewFrame {
        observation_width: left.width(),
        floorplan_width: plan_view.width(),
        image,
        timestamp_step,
    })
}

/// Full frame for one step: raycast view of `pose` beside the plan with
/// `history` drawn as the past trajectory.
pub fn render_dual_view(
    world: &World,
    raster: &PlanRaster,
    history: &[AgentPose],
    pose: AgentPose,
    alpha: f64,
    step: usize,
    ray: &RaycastConfig,
) -> Result<DualViewFrame, RenderError> {
    let obs = raycast_observation(world, pose, ray, &raster.config)?;
    let plan = overlay_pose_trajectory(raster, history, pose, alpha);
    compose_dual_view(&obs.image, &plan, step)
}
