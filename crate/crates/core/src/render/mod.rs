//! Floor-plan rasters with region colors and id labels, pose and trajectory
//! overlays, dual-view frame composition and a 2D raycast observation.

mod draw;
mod frame;
mod palette;
mod plan;
mod raycast;

use std::path::Path;

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{ImageEncoder, RgbImage};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use draw::{draw_line, draw_polyline, draw_text, fill_rect};
pub use frame::{compose_dual_view, render_dual_view, DualViewFrame};
pub use palette::{palette, type_color, DEFAULT_PALETTE};
pub use plan::{
    mask_raster, overlay_pose_trajectory, render_floorplan, trajectory_pixels, PlanRaster,
    PlanTransform, MARKER_COLOR, MASK_COLOR, TRAJECTORY_COLOR,
};
pub use raycast::{raycast_observation, Observation, RaycastConfig};

use crate::geometry::Point2;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("type catalog has {count} entries but the palette holds {capacity}")]
    TooManyTypes { count: usize, capacity: usize },
    #[error("unknown palette `{0}`")]
    UnknownPalette(String),
    #[error("image has zero size")]
    ZeroSize,
    #[error("pose {0} is not in free space")]
    PoseNotFree(Point2),
    #[error("invalid raster config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RasterConfig {
    pub pixels_per_meter: f64,
    pub margin: u32,
    pub marker_size: u32,
    pub palette_id: String,
}

impl Default for RasterConfig {
    fn default() -> Self {
        Self {
            pixels_per_meter: 40.0,
            margin: 16,
            marker_size: 9,
            palette_id: "default".to_string(),
        }
    }
}

/// PNG bytes with fixed encoder settings.
pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>, RenderError> {
    let mut out = Vec::new();
    PngEncoder::new_with_quality(&mut out, CompressionType::Default, FilterType::Adaptive)
        .write_image(img.as_raw(), img.width(), img.height(), image::ExtendedColorType::Rgb8)?;
    Ok(out)
}

pub fn save_png(img: &RgbImage, path: &Path) -> Result<(), RenderError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, encode_png(img)?)?;
    Ok(())
}
