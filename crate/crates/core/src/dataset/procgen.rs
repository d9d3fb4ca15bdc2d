//! Procedural single-floor plans: a corridor spine with rooms on both sides.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::catalog::{CORRIDOR_TYPE, REGION_TYPES};
use super::DatasetError;
use crate::geometry::{FloorPlan, Point2, Polygon, Region, DOORWAY_MIN_WIDTH};

/// Gap between neighboring rooms; it keeps rooms from sharing a doorway.
pub const ROOM_GAP: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FloorPlanSpec {
    pub room_count: usize,
    pub min_room_size: f64,
    pub max_room_size: f64,
    pub corridor_width: f64,
    pub seed: u64,
    pub scene_id: Option<String>,
}

impl Default for FloorPlanSpec {
    fn default() -> Self {
        Self {
            room_count: 6,
            min_room_size: 3.0,
            max_room_size: 5.0,
            corridor_width: 1.6,
            seed: 0,
            scene_id: None,
        }
    }
}

impl FloorPlanSpec {
    fn check(&self) -> Result<(), DatasetError> {
        let bad = |m: String| Err(DatasetError::InfeasibleSpec(m));
        if self.room_count == 0 {
            return bad("room_count must be at least 1".into());
        }
        for (name, v) in [
            ("min_room_size", self.min_room_size),
            ("max_room_size", self.max_room_size),
            ("corridor_width", self.corridor_width),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
            if v < DOORWAY_MIN_WIDTH {
                return bad(format!("{name} {v} is below the doorway width {DOORWAY_MIN_WIDTH}"));
            }
        }
        if self.min_room_size > self.max_room_size {
            return bad(format!(
                "min_room_size {} exceeds max_room_size {}",
                self.min_room_size, self.max_room_size
            ));
        }
        if self.room_count > 10_000 {
            return bad("room_count too large".into());
        }
        Ok(())
    }
}

fn cm(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Polygon {
    Polygon::new(vec![
        Point2::new(x0, y0),
        Point2::new(x1, y0),
        Point2::new(x1, y1),
        Point2::new(x0, y1),
    ])
    .expect("axis-aligned rectangle with positive size")
}

/// Generates a corridor (region 0, type hallway) running along +x with rooms
/// `1..=room_count` alternating above and below it. Each room shares its
/// full width with the corridor, so every room connects only to the
/// corridor. Coordinates are rounded to centimeters.
pub fn gen_synthetic_floorplan(spec: &FloorPlanSpec) -> Result<FloorPlan, DatasetError> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let room_types: Vec<&str> = REGION_TYPES
        .iter()
        .copied()
        .filter(|t| *t != CORRIDOR_TYPE)
        .collect();
    let size = |rng: &mut ChaCha8Rng| {
        if spec.max_room_size > spec.min_room_size {
            cm(rng.gen_range(spec.min_room_size..=spec.max_room_size))
        } else {
            cm(spec.min_room_size)
        }
    };
    let cw = cm(spec.corridor_width);
    let mut cursor = [0.0f64; 2];
    let mut rooms = Vec::with_capacity(spec.room_count);
    for k in 0..spec.room_count {
        let side = k % 2;
        let w = size(&mut rng);
        let d = size(&mut rng);
        let room_type = room_types[rng.gen_range(0..room_types.len())];
        let x0 = cursor[side];
        let x1 = cm(x0 + w);
        cursor[side] = cm(x1 + ROOM_GAP);
        let poly = if side == 0 {
            rect(x0, cw, x1, cm(cw + d))
        } else {
            rect(x0, -d, x1, 0.0)
        };
        rooms.push(Region::new(k as u32 + 1, room_type, poly));
    }
    let length = cm(cursor[0].max(cursor[1]) - ROOM_GAP);
    let mut regions = vec![Region::new(0, CORRIDOR_TYPE, rect(0.0, 0.0, length, cw))];
    regions.extend(rooms);
    let scene = spec
        .scene_id
        .clone()
        .unwrap_or_else(|| format!("synthetic-{}", spec.seed));
    FloorPlan::new(scene, "0", regions).map_err(|e| DatasetError::InfeasibleSpec(e.to_string()))
}
