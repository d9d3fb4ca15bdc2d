//! Floor-plan raster and pose/trajectory overlay.

use image::{Rgb, RgbImage};

use super::draw::{draw_line, draw_polyline, draw_text, fill_rect};
use super::palette::type_color;
use super::{RasterConfig, RenderError};
use crate::geometry::{extract_walls, FloorPlan, Point2};
use crate::simulator::{project_to_plan, AgentPose};

pub const BACKGROUND: Rgb<u8> = Rgb([245, 245, 245]);
pub const WALL_COLOR: Rgb<u8> = Rgb([45, 45, 45]);
pub const LABEL_COLOR: Rgb<u8> = Rgb([20, 20, 20]);
pub const TRAJECTORY_COLOR: Rgb<u8> = Rgb([30, 90, 230]);
pub const MARKER_COLOR: Rgb<u8> = Rgb([0, 40, 200]);
pub const HEADING_COLOR: Rgb<u8> = Rgb([255, 255, 255]);
pub const MASK_COLOR: Rgb<u8> = Rgb([128, 128, 128]);

/// Meters to pixels: x grows right, y grows down.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanTransform {
    pub min_x: f64,
    pub max_y: f64,
    pub pixels_per_meter: f64,
    pub margin: f64,
}

impl PlanTransform {
    pub fn to_pixel(&self, p: Point2) -> (f64, f64) {
        (
            self.margin + (p.x - self.min_x) * self.pixels_per_meter,
            self.margin + (self.max_y - p.y) * self.pixels_per_meter,
        )
    }

    pub fn to_world(&self, px: f64, py: f64) -> Point2 {
        Point2::new(
            self.min_x + (px - self.margin) / self.pixels_per_meter,
            self.max_y - (py - self.margin) / self.pixels_per_meter,
        )
    }
}

/// A rendered plan with the transform used to draw it.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanRaster {
    pub image: RgbImage,
    pub transform: PlanTransform,
    pub config: RasterConfig,
}

/// Fills each region with its type color, strokes walls and writes each
/// region id at the region's pole of inaccessibility.
pub fn render_floorplan(fp: &FloorPlan, cfg: &RasterConfig) -> Result<PlanRaster, RenderError> {
    if !(cfg.pixels_per_meter.is_finite() && cfg.pixels_per_meter > 0.0) {
        return Err(RenderError::InvalidConfig(format!(
            "pixels_per_meter must be positive, got {}",
            cfg.pixels_per_meter
        )));
    }
    let catalog = fp.type_catalog();
    let colors = (0..catalog.len())
        .map(|i| type_color(&cfg.palette_id, i, catalog.len()))
        .collect::<Result<Vec<_>, _>>()?;
    let b = fp.bounds();
    let ppm = cfg.pixels_per_meter;
    let margin = cfg.margin as f64;
    let w = (b.width() * ppm).ceil() as u32 + 2 * cfg.margin + 1;
    let h = (b.height() * ppm).ceil() as u32 + 2 * cfg.margin + 1;
    let transform = PlanTransform {
        min_x: b.min.x,
        max_y: b.max.y,
        pixels_per_meter: ppm,
        margin,
    };
    let mut img = RgbImage::from_pixel(w, h, BACKGROUND);
    for y in 0..h {
        for x in 0..w {
            let p = transform.to_world(x as f64 + 0.5, y as f64 + 0.5);
            if let Some(r) = fp.locate(p) {
                let idx = fp.type_index(&r.region_type).expect("type in catalog");
                img.put_pixel(x, y, colors[idx]);
            }
        }
    }
    for wall in &extract_walls(fp).walls {
        draw_line(
            &mut img,
            transform.to_pixel(wall.a),
            transform.to_pixel(wall.b),
            2,
            WALL_COLOR,
        );
    }
    let scale = if ppm >= 30.0 { 2 } else { 1 };
    for r in fp.regions() {
        let (cx, cy) = transform.to_pixel(r.anchor());
        draw_text(&mut img, &r.id.to_string(), cx, cy, scale, LABEL_COLOR);
    }
    Ok(PlanRaster {
        image: img,
        transform,
        config: cfg.clone(),
    })
}

/// Pixel positions of trajectory points after projection by `alpha`.
pub fn trajectory_pixels(raster: &PlanRaster, trajectory: &[AgentPose], alpha: f64) -> Vec<(f64, f64)> {
    trajectory
        .iter()
        .map(|p| raster.transform.to_pixel(project_to_plan(alpha, p.position())))
        .collect()
}

/// Draws past positions as a blue polyline and the current pose as a blue
/// square with a heading tick. The base raster is left untouched.
pub fn overlay_pose_trajectory(
    raster: &PlanRaster,
    trajectory: &[AgentPose],
    pose: AgentPose,
    alpha: f64,
) -> RgbImage {
    let mut img = raster.image.clone();
    let mut points = trajectory_pixels(raster, trajectory, alpha);
    let (cx, cy) = raster.transform.to_pixel(project_to_plan(alpha, pose.position()));
    if !points.is_empty() {
        points.push((cx, cy));
        draw_polyline(&mut img, &points, 2, TRAJECTORY_COLOR);
    }
    let size = raster.config.marker_size.max(3);
    fill_rect(&mut img, cx, cy, size, MARKER_COLOR);
    let reach = size as f64 * 0.5;
    let tip = (cx + reach * pose.theta.sin(), cy - reach * pose.theta.cos());
    draw_line(&mut img, (cx, cy), tip, 1, HEADING_COLOR);
    img
}

/// Copy of the raster with the axis-aligned world box `[min, max]` painted
/// grey, hiding that part of the plan.
pub fn mask_raster(raster: &PlanRaster, min: Point2, max: Point2) -> RgbImage {
    let mut img = raster.image.clone();
    let (x0, y0) = raster.transform.to_pixel(Point2::new(min.x, max.y));
    let (x1, y1) = raster.transform.to_pixel(Point2::new(max.x, min.y));
    let clamp = |v: f64, hi: u32| v.round().clamp(0.0, hi as f64) as u32;
    for y in clamp(y0, img.height())..clamp(y1, img.height()) {
        for x in clamp(x0, img.width())..clamp(x1, img.width()) {
            img.put_pixel(x, y, MASK_COLOR);
        }
    }
    img
}
