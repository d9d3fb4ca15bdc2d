//! Column raycaster producing a simple egocentric view.

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use super::palette::type_color;
use super::{RasterConfig, RenderError};
use crate::geometry::Point2;
use crate::simulator::{AgentPose, World};

const CEILING: Rgb<u8> = Rgb([200, 205, 215]);
const FLOOR_DIM: f64 = 0.55;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RaycastConfig {
    pub fov_degrees: f64,
    pub columns: u32,
    pub height: u32,
    pub max_range: f64,
}

impl Default for RaycastConfig {
    fn default() -> Self {
        Self {
            fov_degrees: 90.0,
            columns: 160,
            height: 120,
            max_range: 10.0,
        }
    }
}

impl RaycastConfig {
    /// Heading offset of column `c` relative to the agent, left to right.
    pub fn column_offset(&self, c: u32) -> f64 {
        let fov = self.fov_degrees.to_radians();
        -fov / 2.0 + (c as f64 + 0.5) * fov / self.columns as f64
    }
}

/// View image plus the per-column wall distances behind it.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub image: RgbImage,
    /// Perpendicular-corrected distance of the nearest wall per column.
    pub distances: Vec<Option<f64>>,
    /// Index into the world's wall list of the wall hit per column.
    pub walls: Vec<Option<usize>>,
}

fn scale(c: Rgb<u8>, f: f64) -> Rgb<u8> {
    Rgb(c.0.map(|v| (v as f64 * f).round().clamp(0.0, 255.0) as u8))
}

/// Casts one ray per column. Walls take the color of the region they bound;
/// the floor takes the agent's current region color, dimmed.
pub fn raycast_observation(
    world: &World,
    pose: AgentPose,
    cfg: &RaycastConfig,
    palette: &RasterConfig,
) -> Result<Observation, RenderError> {
    if cfg.columns == 0 || cfg.height == 0 {
        return Err(RenderError::ZeroSize);
    }
    if !(cfg.max_range > 0.0 && cfg.fov_degrees > 0.0 && cfg.fov_degrees < 180.0) {
        return Err(RenderError::InvalidConfig(
            "field of view must be in (0, 180) degrees and range positive".into(),
        ));
    }
    let origin = pose.position();
    if !world.is_free(origin) {
        return Err(RenderError::PoseNotFree(origin));
    }
    let fp = &world.floorplan;
    let catalog_len = fp.type_catalog().len();
    let region_color = |id: u32| -> Result<Rgb<u8>, RenderError> {
        let r = fp.region(id).expect("wall owner exists");
        type_color(
            &palette.palette_id,
            fp.type_index(&r.region_type).expect("type in catalog"),
            catalog_len,
        )
    };
    let here = fp.locate(origin).expect("free pose lies in a region");
    let floor = scale(region_color(here.id)?, FLOOR_DIM);

    let h = cfg.height;
    let mut img = RgbImage::new(cfg.columns, h);
    let mut distances = Vec::with_capacity(cfg.columns as usize);
    let mut walls = Vec::with_capacity(cfg.columns as usize);
    for c in 0..cfg.columns {
        let offset = cfg.column_offset(c);
        let dir = Point2::from_heading(pose.theta + offset);
        let hit = world.walls.cast_ray(origin, dir, cfg.max_range);
        let (top, bottom, wall_color) = match hit {
            Some((t, idx)) => {
                let d = t * offset.cos();
                distances.push(Some(d));
                walls.push(Some(idx));
                let line = (h as f64 / d.max(1e-6)).min(h as f64);
                let top = ((h as f64 - line) / 2.0).round() as u32;
                let bottom = (top + line.round() as u32).min(h);
                let base = region_color(world.walls.walls[idx].region_id)?;
                (top, bottom, Some(scale(base, 1.0 / (1.0 + 0.15 * d))))
            }
            None => {
                distances.push(None);
                walls.push(None);
                (h / 2, h / 2, None)
            }
        };
        for y in 0..h {
            let color = if y < top {
                CEILING
            } else if y < bottom {
                wall_color.unwrap_or(CEILING)
            } else {
                floor
            };
            img.put_pixel(c, y, color);
        }
    }
    Ok(Observation {
        image: img,
        distances,
        walls,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{FloorPlan, Polygon, Region};

    fn room() -> World {
        let poly = Polygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(4.0, 0.0),
            Point2::new(4.0, 4.0),
            Point2::new(0.0, 4.0),
        ])
        .unwrap();
        World::new(FloorPlan::new("s", "0", vec![Region::new(0, "kitchen", poly)]).unwrap())
    }

    #[test]
    fn center_column_distance() {
        let cfg = RaycastConfig::default();
        let obs = raycast_observation(&room(), AgentPose::new(2.0, 2.0, 0.0), &cfg, &RasterConfig::default())
            .unwrap();
        let d = obs.distances[cfg.columns as usize / 2].unwrap();
        assert!((d - 2.0).abs() < 1e-6);
        assert_eq!(obs.image.dimensions(), (160, 120));
    }

    #[test]
    fn pose_outside_free_space_errors() {
        let err = raycast_observation(
            &room(),
            AgentPose::new(5.0, 2.0, 0.0),
            &RaycastConfig::default(),
            &RasterConfig::default(),
        );
        assert!(matches!(err, Err(RenderError::PoseNotFree(_))));
    }
}
