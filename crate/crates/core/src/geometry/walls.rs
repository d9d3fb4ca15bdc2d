//! Wall and doorway extraction.
//!
//! Region boundaries are walls unless they coincide with the boundary of a
//! different region over at least [`DOORWAY_MIN_WIDTH`] meters; such shared
//! stretches are doorways and are passable. Every boundary edge is split into
//! sub-segments that are either wall or doorway, so the two lists together
//! partition the boundary of every region.

use std::collections::{BTreeMap, BTreeSet};

use super::floorplan::FloorPlan;
use super::point::{closest_point_on_segment, point_segment_distance, Point2};

/// Lateral distance within which two edges count as coincident.
pub const COINCIDENCE_TOL: f64 = 1e-6;
/// Shared boundary shorter than this stays a wall.
pub const DOORWAY_MIN_WIDTH: f64 = 0.6;

const MIN_PIECE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WallSegment {
    pub a: Point2,
    pub b: Point2,
    /// Region whose boundary this wall belongs to.
    pub region_id: u32,
}

impl WallSegment {
    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Doorway {
    pub a: Point2,
    pub b: Point2,
    pub region_id: u32,
    pub other_region_id: u32,
}

impl Doorway {
    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    pub fn midpoint(&self) -> Point2 {
        self.a.lerp(self.b, 0.5)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WallSet {
    pub walls: Vec<WallSegment>,
    pub doorways: Vec<Doorway>,
}

impl WallSet {
    pub fn is_empty(&self) -> bool {
        self.walls.is_empty()
    }

    /// Distance from `p` to the nearest wall, infinity when there are none.
    pub fn min_distance(&self, p: Point2) -> f64 {
        self.walls
            .iter()
            .map(|w| point_segment_distance(p, w.a, w.b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Nearest wall hit along the ray `origin + t * dir` (`dir` unit length)
    /// with `t <= max_range`. Returns the hit distance and the wall index.
    pub fn cast_ray(&self, origin: Point2, dir: Point2, max_range: f64) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for (i, w) in self.walls.iter().enumerate() {
            if let Some(t) = super::point::ray_segment_intersection(origin, dir, w.a, w.b) {
                if t <= max_range && best.is_none_or(|(bt, _)| t < bt) {
                    best = Some((t, i));
                }
            }
        }
        best
    }

    /// Largest travel distance `s <= distance` along the unit direction `dir`
    /// that keeps the moving point at least `clearance` away from every wall.
    ///
    /// A start point already inside some wall's clearance band may move away
    /// from (or parallel to) that wall but not toward it.
    pub fn clearance_limit(&self, origin: Point2, dir: Point2, distance: f64, clearance: f64) -> f64 {
        let mut limit = distance;
        for w in &self.walls {
            let t = capsule_entry(origin, dir, w.a, w.b, clearance);
            if t < limit {
                limit = t;
            }
        }
        limit.max(0.0)
    }

    /// True when the straight segment `p`-`q` stays at least `clearance` from
    /// every wall.
    pub fn segment_is_clear(&self, p: Point2, q: Point2, clearance: f64) -> bool {
        self.walls.iter().all(|w| {
            super::point::segment_segment_distance(p, q, w.a, w.b) >= clearance
        })
    }
}

/// Smallest `t >= 0` at which `origin + t * dir` enters the closed capsule of
/// radius `r` around segment `a`-`b`; infinity if it never does.
fn capsule_entry(origin: Point2, dir: Point2, a: Point2, b: Point2, r: f64) -> f64 {
    let d0 = point_segment_distance(origin, a, b);
    if d0 < r {
        let q = closest_point_on_segment(origin, a, b);
        let away = origin - q;
        if d0 == 0.0 || dir.dot(away) < 0.0 {
            return 0.0;
        }
        return f64::INFINITY;
    }

    let mut best = f64::INFINITY;
    let seg = b - a;
    let len = seg.norm();
    if len > 0.0 {
        let u = seg * (1.0 / len);
        let n = Point2::new(-u.y, u.x);
        for side in [1.0, -1.0] {
            // Offset line a + n*r*side + s*u, s in [0, len].
            let base = a + n * (r * side);
            let denom = dir.cross(u);
            if denom.abs() > 1e-15 {
                let bo = base - origin;
                let t = bo.cross(u) / denom;
                let s = bo.cross(dir) / denom;
                if t >= 0.0 && (0.0..=len).contains(&s) {
                    best = best.min(t);
                }
            }
        }
    }
    for c in [a, b] {
        // |origin + t dir - c|^2 = r^2
        let oc = origin - c;
        let bq = oc.dot(dir);
        let cq = oc.dot(oc) - r * r;
        let disc = bq * bq - cq;
        if disc >= 0.0 {
            let t = -bq - disc.sqrt();
            if t >= 0.0 {
                best = best.min(t);
            }
        }
    }
    best
}

/// Extracts walls and doorways using the default coincidence tolerance.
pub fn extract_walls(fp: &FloorPlan) -> WallSet {
    extract_walls_with_tolerance(fp, COINCIDENCE_TOL)
}

/// Like [`extract_walls`] with a configurable lateral tolerance for deciding
/// that two edges coincide. Wider tolerances let perturbed plans keep their
/// doorways.
pub fn extract_walls_with_tolerance(fp: &FloorPlan, lateral_tol: f64) -> WallSet {
    let mut out = WallSet::default();
    for region in fp.regions() {
        for (a, b) in region.polygon.edges() {
            let len = a.distance(b);
            if len <= MIN_PIECE {
                continue;
            }
            let u = (b - a) * (1.0 / len);

            // Overlap intervals along this edge, grouped by the other region.
            let mut shared: BTreeMap<u32, Vec<(f64, f64)>> = BTreeMap::new();
            for other in fp.regions() {
                if other.id == region.id {
                    continue;
                }
                for (c, d) in other.polygon.edges() {
                    if u.cross(c - a).abs() > lateral_tol || u.cross(d - a).abs() > lateral_tol {
                        continue;
                    }
                    let tc = u.dot(c - a);
                    let td = u.dot(d - a);
                    let lo = tc.min(td).max(0.0);
                    let hi = tc.max(td).min(len);
                    if hi - lo > MIN_PIECE {
                        shared.entry(other.id).or_default().push((lo, hi));
                    }
                }
            }

            let mut open: Vec<(f64, f64)> = Vec::new();
            for (other_id, intervals) in shared {
                for (lo, hi) in merge_intervals(intervals) {
                    if hi - lo >= DOORWAY_MIN_WIDTH - 1e-9 {
                        out.doorways.push(Doorway {
                            a: a + u * lo,
                            b: a + u * hi,
                            region_id: region.id,
                            other_region_id: other_id,
                        });
                        open.push((lo, hi));
                    }
                }
            }

            let mut cursor = 0.0;
            for (lo, hi) in merge_intervals(open) {
                if lo - cursor > MIN_PIECE {
                    out.walls.push(WallSegment {
                        a: if cursor == 0.0 { a } else { a + u * cursor },
                        b: a + u * lo,
                        region_id: region.id,
                    });
                }
                cursor = cursor.max(hi);
            }
            if len - cursor > MIN_PIECE {
                out.walls.push(WallSegment {
                    a: if cursor == 0.0 { a } else { a + u * cursor },
                    b,
                    region_id: region.id,
                });
            }
        }
    }
    out
}

fn merge_intervals(mut intervals: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    intervals.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
    for (lo, hi) in intervals {
        match merged.last_mut() {
            Some(last) if lo <= last.1 + MIN_PIECE => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    merged
}

/// Symmetric, irreflexive doorway adjacency between regions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Adjacency {
    pairs: BTreeSet<(u32, u32)>,
}

impl Adjacency {
    pub fn from_doorways(doorways: &[Doorway]) -> Self {
        let pairs = doorways
            .iter()
            .filter(|d| d.region_id != d.other_region_id)
            .map(|d| {
                (
                    d.region_id.min(d.other_region_id),
                    d.region_id.max(d.other_region_id),
                )
            })
            .collect();
        Self { pairs }
    }

    /// Unordered pairs, each reported once as `(smaller, larger)`.
    pub fn pairs(&self) -> &BTreeSet<(u32, u32)> {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, i: u32, j: u32) -> bool {
        self.pairs.contains(&(i.min(j), i.max(j)))
    }

    pub fn neighbors(&self, id: u32) -> impl Iterator<Item = u32> + '_ {
        self.pairs.iter().filter_map(move |&(i, j)| {
            if i == id {
                Some(j)
            } else if j == id {
                Some(i)
            } else {
                None
            }
        })
    }

    /// True when every listed region can reach every other through doorways.
    pub fn is_connected(&self, ids: &[u32]) -> bool {
        let Some(&first) = ids.first() else {
            return true;
        };
        let mut seen = BTreeSet::from([first]);
        let mut stack = vec![first];
        while let Some(n) = stack.pop() {
            for m in self.neighbors(n) {
                if seen.insert(m) {
                    stack.push(m);
                }
            }
        }
        ids.iter().all(|i| seen.contains(i))
    }
}

pub fn region_adjacency(fp: &FloorPlan) -> Adjacency {
    Adjacency::from_doorways(&extract_walls(fp).doorways)
}
