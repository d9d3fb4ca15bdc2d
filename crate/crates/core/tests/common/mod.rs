//! Shared fixtures and independent oracles for integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use fpnav_core::dataset::{gen_episodes, gen_synthetic_floorplan, Episode, EpisodeGenSpec, FloorPlanSpec};
use fpnav_core::eval::{NavTask, PlanContext};
use fpnav_core::geometry::{FloorPlan, Point2, Polygon, Region};

/// A benchmark suite: procedural plans and episodes drawn on them.
pub struct Suite {
    pub plans: Vec<Arc<PlanContext>>,
    pub episodes: Vec<Episode>,
    pub tasks: Vec<NavTask>,
}

pub fn suite(plan_count: usize, per_plan: usize) -> Suite {
    let mut plans = Vec::new();
    let mut episodes = Vec::new();
    let mut tasks = Vec::new();
    for i in 0..plan_count {
        let fp = gen_synthetic_floorplan(&FloorPlanSpec {
            room_count: 6,
            seed: 100 + i as u64,
            ..Default::default()
        })
        .expect("plan");
        let ctx = Arc::new(PlanContext::new(fp));
        let eps = gen_episodes(
            &ctx,
            &format!("plan-{i}.json"),
            &EpisodeGenSpec {
                count: per_plan,
                seed: 7 + i as u64,
                ..Default::default()
            },
        )
        .expect("episodes");
        for e in &eps {
            let task = NavTask::new(e.episode_id.clone(), Arc::clone(&ctx), e.start_pose, e.goal)
                .expect("task")
                .with_instruction(e.instruction.rendered.clone());
            tasks.push(task);
        }
        episodes.extend(eps);
        plans.push(ctx);
    }
    Suite {
        plans,
        episodes,
        tasks,
    }
}

pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Polygon {
    Polygon::new(vec![
        Point2::new(x0, y0),
        Point2::new(x1, y0),
        Point2::new(x1, y1),
        Point2::new(x0, y1),
    ])
    .unwrap()
}

/// Four 4 m rooms in a row along x: 0 kitchen, 1 hallway, 2 bedroom, 3 bathroom.
pub fn row_plan() -> FloorPlan {
    let types = ["kitchen", "hallway", "bedroom", "bathroom"];
    let regions = (0..4)
        .map(|i| {
            let x = 4.0 * i as f64;
            Region::new(i, types[i as usize], rect(x, 0.0, x + 4.0, 4.0))
        })
        .collect();
    FloorPlan::new("row", "0", regions).unwrap()
}

pub fn seg_dist(p: Point2, a: Point2, b: Point2) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    };
    ((a.x + t * dx - p.x).powi(2) + (a.y + t * dy - p.y).powi(2)).sqrt()
}

/// Distance from `p` to the polygon outline.
pub fn outline_distance(p: Point2, verts: &[Point2]) -> f64 {
    (0..verts.len())
        .map(|i| seg_dist(p, verts[i], verts[(i + 1) % verts.len()]))
        .fold(f64::INFINITY, f64::min)
}

/// Winding number by summing signed subtended angles.
pub fn angle_sum_winding(p: Point2, verts: &[Point2]) -> i32 {
    let mut total = 0.0;
    for i in 0..verts.len() {
        let a = verts[i];
        let b = verts[(i + 1) % verts.len()];
        let (ax, ay) = (a.x - p.x, a.y - p.y);
        let (bx, by) = (b.x - p.x, b.y - p.y);
        total += (ax * by - ay * bx).atan2(ax * bx + ay * by);
    }
    (total / std::f64::consts::TAU).round() as i32
}

/// Region ids whose interior strictly contains `p`, by brute force.
pub fn containing_regions(fp: &FloorPlan, p: Point2) -> Vec<u32> {
    fp.regions()
        .iter()
        .filter(|r| angle_sum_winding(p, r.polygon.vertices()) != 0)
        .map(|r| r.id)
        .collect()
}

/// Boundary-inclusive containment with the smallest-id tie-break.
pub fn covering_region(fp: &FloorPlan, p: Point2) -> Option<u32> {
    fp.regions()
        .iter()
        .filter(|r| {
            outline_distance(p, r.polygon.vertices()) < 1e-9
                || angle_sum_winding(p, r.polygon.vertices()) != 0
        })
        .map(|r| r.id)
        .min()
}

/// Parameter along `o + t*d` where it meets segment `ab`, if any.
pub fn ray_hit(o: Point2, d: Point2, a: Point2, b: Point2) -> Option<f64> {
    // Solve o + t d = a + s (b - a) by Cramer's rule.
    let e = Point2::new(b.x - a.x, b.y - a.y);
    let den = d.x * (-e.y) - d.y * (-e.x);
    if den.abs() < 1e-15 {
        return None;
    }
    let (rx, ry) = (a.x - o.x, a.y - o.y);
    let t = (rx * (-e.y) - ry * (-e.x)) / den;
    let s = (d.x * ry - d.y * rx) / den;
    (t >= 0.0 && (-1e-12..=1.0 + 1e-12).contains(&s)).then_some(t)
}

/// Smallest distance between segments `pq` and `ab`, by endpoint projection
/// plus a proper-crossing check.
pub fn seg_seg_dist(p: Point2, q: Point2, a: Point2, b: Point2) -> f64 {
    let cross = |o: Point2, u: Point2, v: Point2| (u.x - o.x) * (v.y - o.y) - (u.y - o.y) * (v.x - o.x);
    let (d1, d2) = (cross(p, q, a), cross(p, q, b));
    let (d3, d4) = (cross(a, b, p), cross(a, b, q));
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        return 0.0;
    }
    seg_dist(p, a, b)
        .min(seg_dist(q, a, b))
        .min(seg_dist(a, p, q))
        .min(seg_dist(b, p, q))
}

/// Collinear overlap intervals between every edge pair of two regions, as
/// segments. Independent of the library's wall extraction.
pub fn shared_stretches(fp: &FloorPlan, i: u32, j: u32) -> Vec<(Point2, Point2)> {
    let (ri, rj) = (fp.region(i).unwrap(), fp.region(j).unwrap());
    let edges = |v: &[Point2]| -> Vec<(Point2, Point2)> {
        (0..v.len()).map(|k| (v[k], v[(k + 1) % v.len()])).collect()
    };
    let mut out = Vec::new();
    for (a, b) in edges(ri.polygon.vertices()) {
        let len = a.distance(b);
        let (ux, uy) = ((b.x - a.x) / len, (b.y - a.y) / len);
        for (c, d) in edges(rj.polygon.vertices()) {
            let off = |p: Point2| ((p.x - a.x) * uy - (p.y - a.y) * ux).abs();
            if off(c) > 1e-6 || off(d) > 1e-6 {
                continue;
            }
            let along = |p: Point2| (p.x - a.x) * ux + (p.y - a.y) * uy;
            let lo = along(c).min(along(d)).max(0.0);
            let hi = along(c).max(along(d)).min(len);
            if hi - lo > 1e-9 {
                out.push((
                    Point2::new(a.x + ux * lo, a.y + uy * lo),
                    Point2::new(a.x + ux * hi, a.y + uy * hi),
                ));
            }
        }
    }
    out
}

/// Region pairs joined by a shared stretch at least `min_width` long.
pub fn passable_pairs(fp: &FloorPlan, min_width: f64) -> std::collections::BTreeSet<(u32, u32)> {
    let ids: Vec<u32> = fp.regions().iter().map(|r| r.id).collect();
    let mut out = std::collections::BTreeSet::new();
    for &i in &ids {
        for &j in &ids {
            if i < j
                && shared_stretches(fp, i, j)
                    .iter()
                    .any(|(a, b)| a.distance(*b) >= min_width - 1e-9)
            {
                out.insert((i, j));
            }
        }
    }
    out
}
