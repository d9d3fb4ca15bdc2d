//! 8-connected lattice planning over free space.
//!
//! Lattice nodes sit at `origin + (i, j) * resolution`. A node is free when
//! it lies inside some region and keeps the configured clearance from every
//! wall; an edge exists between neighboring free nodes when the straight
//! segment between them keeps the same clearance. Straight moves cost one
//! resolution, diagonal moves `√2` resolutions.

use std::sync::Arc;

use ordered_float::OrderedFloat;
use pathfinding::directed::astar::astar;
use pathfinding::directed::dijkstra::dijkstra_all;

use super::EvalError;
use crate::geometry::{segment_segment_distance, Bounds, FloorPlan, Point2, WallSet};
use crate::simulator::{World, WALL_CLEARANCE};

/// Lattice spacing used for planning and reference path lengths.
pub const PLANNING_RESOLUTION: f64 = 0.1;

const NEIGHBORS: [(i64, i64); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

/// Axis-aligned area of the plan whose contents are unknown to the planner;
/// it is treated as obstacle-free.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaskRect {
    pub min: Point2,
    pub max: Point2,
}

impl MaskRect {
    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

/// Uniform bucket index over wall segments for local clearance queries.
#[derive(Clone, Debug)]
struct WallIndex {
    origin: Point2,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<(Point2, Point2)>>,
}

impl WallIndex {
    fn new(walls: &WallSet, bounds: Bounds, cell: f64) -> Self {
        let origin = Point2::new(bounds.min.x - 1.0, bounds.min.y - 1.0);
        let nx = ((bounds.width() + 2.0) / cell).ceil() as usize + 1;
        let ny = ((bounds.height() + 2.0) / cell).ceil() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        let mut idx = Self {
            origin,
            cell,
            nx,
            ny,
            buckets: Vec::new(),
        };
        for w in &walls.walls {
            let (i0, j0) = idx.cell_of(Point2::new(w.a.x.min(w.b.x), w.a.y.min(w.b.y)));
            let (i1, j1) = idx.cell_of(Point2::new(w.a.x.max(w.b.x), w.a.y.max(w.b.y)));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push((w.a, w.b));
                }
            }
        }
        idx.buckets = buckets;
        idx
    }

    fn cell_of(&self, p: Point2) -> (usize, usize) {
        let i = ((p.x - self.origin.x) / self.cell).floor().clamp(0.0, (self.nx - 1) as f64);
        let j = ((p.y - self.origin.y) / self.cell).floor().clamp(0.0, (self.ny - 1) as f64);
        (i as usize, j as usize)
    }

    /// True when segment `p`-`q` keeps at least `clearance` from all walls.
    fn segment_clear(&self, p: Point2, q: Point2, clearance: f64) -> bool {
        let lo = Point2::new(p.x.min(q.x) - clearance, p.y.min(q.y) - clearance);
        let hi = Point2::new(p.x.max(q.x) + clearance, p.y.max(q.y) + clearance);
        let (i0, j0) = self.cell_of(lo);
        let (i1, j1) = self.cell_of(hi);
        for j in j0..=j1 {
            for i in i0..=i1 {
                for &(a, b) in &self.buckets[j * self.nx + i] {
                    if segment_segment_distance(p, q, a, b) < clearance {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Free-space lattice for one floor plan, wall set and clearance.
#[derive(Clone, Debug)]
pub struct GridMap {
    origin: Point2,
    resolution: f64,
    clearance: f64,
    nx: usize,
    ny: usize,
    free: Vec<bool>,
    /// Bit `k` set when the move `NEIGHBORS[k]` is allowed.
    moves: Vec<u8>,
    index: WallIndex,
    mask: Option<MaskRect>,
}

impl GridMap {
    pub fn new(fp: &FloorPlan, walls: &WallSet, resolution: f64, clearance: f64) -> Self {
        Self::with_mask(fp, walls, resolution, clearance, None)
    }

    pub fn for_world(world: &World, resolution: f64, clearance: f64) -> Self {
        Self::new(&world.floorplan, &world.walls, resolution, clearance)
    }

    pub fn with_mask(
        fp: &FloorPlan,
        walls: &WallSet,
        resolution: f64,
        clearance: f64,
        mask: Option<MaskRect>,
    ) -> Self {
        let bounds = fp.bounds();
        let origin = Point2::new(
            (bounds.min.x / resolution).floor() * resolution,
            (bounds.min.y / resolution).floor() * resolution,
        );
        let nx = ((bounds.max.x - origin.x) / resolution).ceil() as usize + 1;
        let ny = ((bounds.max.y - origin.y) / resolution).ceil() as usize + 1;
        let index = WallIndex::new(walls, bounds, 1.0);

        let mut grid = Self {
            origin,
            resolution,
            clearance,
            nx,
            ny,
            free: vec![false; nx * ny],
            moves: vec![0; nx * ny],
            index,
            mask,
        };
        for j in 0..ny {
            for i in 0..nx {
                let p = grid.node_position(j * nx + i);
                let masked = mask.is_some_and(|m| m.contains(p)) && bounds.contains(p);
                grid.free[j * nx + i] = masked
                    || (fp.locate(p).is_some() && grid.index.segment_clear(p, p, clearance));
            }
        }
        for node in 0..nx * ny {
            if !grid.free[node] {
                continue;
            }
            let mut bits = 0u8;
            for (k, _) in NEIGHBORS.iter().enumerate() {
                if let Some(other) = grid.neighbor(node, k) {
                    if grid.free[other] && grid.edge_clear(node, other) {
                        bits |= 1 << k;
                    }
                }
            }
            grid.moves[node] = bits;
        }
        grid
    }

    fn edge_clear(&self, a: usize, b: usize) -> bool {
        let (pa, pb) = (self.node_position(a), self.node_position(b));
        if let Some(m) = self.mask {
            if m.contains(pa) && m.contains(pb) {
                return true;
            }
        }
        self.index.segment_clear(pa, pb, self.clearance)
    }

    fn neighbor(&self, node: usize, k: usize) -> Option<usize> {
        let (i, j) = ((node % self.nx) as i64, (node / self.nx) as i64);
        let (di, dj) = NEIGHBORS[k];
        let (ni, nj) = (i + di, j + dj);
        if ni < 0 || nj < 0 || ni >= self.nx as i64 || nj >= self.ny as i64 {
            return None;
        }
        Some(nj as usize * self.nx + ni as usize)
    }

    fn successors(&self, node: usize) -> impl Iterator<Item = (usize, OrderedFloat<f64>)> + '_ {
        let bits = self.moves[node];
        (0..8).filter(move |k| bits & (1 << k) != 0).map(move |k| {
            let step = if k < 4 {
                self.resolution
            } else {
                self.resolution * std::f64::consts::SQRT_2
            };
            (
                self.neighbor(node, k).expect("allowed move stays on the grid"),
                OrderedFloat(step),
            )
        })
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn clearance(&self) -> f64 {
        self.clearance
    }

    pub fn node_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_free_node(&self, node: usize) -> bool {
        self.free[node]
    }

    pub fn node_position(&self, node: usize) -> Point2 {
        let (i, j) = (node % self.nx, node / self.nx);
        Point2::new(
            self.origin.x + i as f64 * self.resolution,
            self.origin.y + j as f64 * self.resolution,
        )
    }

    /// True when the straight segment keeps the planner's clearance (masked
    /// area counts as open).
    pub fn segment_clear(&self, p: Point2, q: Point2) -> bool {
        if let Some(m) = self.mask {
            if m.contains(p) && m.contains(q) {
                return true;
            }
        }
        self.index.segment_clear(p, q, self.clearance)
    }

    /// Free nodes near `p` reachable by a straight wall-free segment, with the
    /// cost of that connecting segment.
    fn attachments(&self, p: Point2) -> Vec<(usize, f64)> {
        let mut radius = 2i64;
        loop {
            let ci = ((p.x - self.origin.x) / self.resolution).round() as i64;
            let cj = ((p.y - self.origin.y) / self.resolution).round() as i64;
            let mut out = Vec::new();
            for dj in -radius..=radius {
                for di in -radius..=radius {
                    let (i, j) = (ci + di, cj + dj);
                    if i < 0 || j < 0 || i >= self.nx as i64 || j >= self.ny as i64 {
                        continue;
                    }
                    let node = j as usize * self.nx + i as usize;
                    if !self.free[node] {
                        continue;
                    }
                    let q = self.node_position(node);
                    let masked = self.mask.is_some_and(|m| m.contains(p) && m.contains(q));
                    if masked || self.index.segment_clear(p, q, 1e-9) {
                        out.push((node, p.distance(q)));
                    }
                }
            }
            if !out.is_empty() || radius >= 8 {
                return out;
            }
            radius *= 2;
        }
    }

    /// Length of the shortest lattice path between two points, including the
    /// straight connections from each point to its lattice node. Infinity when
    /// no path exists.
    pub fn path_length(&self, a: Point2, b: Point2) -> f64 {
        self.shortest_path(a, b).map_or(f64::INFINITY, |(_, len)| len)
    }

    /// Shortest path as a point list from `a` to `b`.
    pub fn shortest_path(&self, a: Point2, b: Point2) -> Option<(Vec<Point2>, f64)> {
        if a == b {
            return Some((vec![a, b], 0.0));
        }
        let starts = self.attachments(a);
        let goals = self.attachments(b);
        if starts.is_empty() || goals.is_empty() {
            return None;
        }
        let goal_cost: std::collections::HashMap<usize, f64> = goals.iter().copied().collect();
        // Straight-line distance to `b` never exceeds lattice cost plus the
        // final attachment segment, so it is admissible.
        let octile = move |p: Point2| p.distance(b);

        // Virtual source/sink nodes sit past the lattice indices.
        let source = usize::MAX - 1;
        let sink = usize::MAX;
        let result = astar(
            &source,
            |&n| -> Vec<(usize, OrderedFloat<f64>)> {
                if n == source {
                    starts.iter().map(|&(s, c)| (s, OrderedFloat(c))).collect()
                } else if n == sink {
                    Vec::new()
                } else {
                    let mut v: Vec<_> = self.successors(n).collect();
                    if let Some(&c) = goal_cost.get(&n) {
                        v.push((sink, OrderedFloat(c)));
                    }
                    v
                }
            },
            |&n| {
                if n == source || n == sink {
                    OrderedFloat(0.0)
                } else {
                    OrderedFloat(octile(self.node_position(n)))
                }
            },
            |&n| n == sink,
        )?;
        let (nodes, cost) = result;
        let mut points = vec![a];
        points.extend(
            nodes
                .iter()
                .filter(|&&n| n != source && n != sink)
                .map(|&n| self.node_position(n)),
        );
        points.push(b);
        Some((points, cost.0))
    }

    /// Distances from every free node to `goal`.
    pub fn distance_field(self: &Arc<Self>, goal: Point2) -> DistanceField {
        let attachments = self.attachments(goal);
        let mut dist = vec![f64::INFINITY; self.node_count()];
        let mut parent = vec![usize::MAX; self.node_count()];
        if !attachments.is_empty() {
            let source = usize::MAX;
            let reached = dijkstra_all(&source, |&n| -> Vec<(usize, OrderedFloat<f64>)> {
                if n == source {
                    attachments.iter().map(|&(s, c)| (s, OrderedFloat(c))).collect()
                } else {
                    // Undirected graph: reverse moves are symmetric.
                    self.successors(n).collect()
                }
            });
            for (node, (prev, cost)) in reached {
                dist[node] = cost.0;
                parent[node] = prev;
            }
        }
        DistanceField {
            grid: Arc::clone(self),
            goal,
            dist,
            parent,
        }
    }
}

/// Shortest-path distances from all lattice nodes to one goal point.
#[derive(Clone, Debug)]
pub struct DistanceField {
    grid: Arc<GridMap>,
    goal: Point2,
    dist: Vec<f64>,
    /// Next node toward the goal; `usize::MAX` at the goal attachment.
    parent: Vec<usize>,
}

impl DistanceField {
    pub fn grid(&self) -> &GridMap {
        &self.grid
    }

    pub fn goal(&self) -> Point2 {
        self.goal
    }

    pub fn is_reachable_from(&self, p: Point2) -> bool {
        self.distance_from(p).is_finite()
    }

    /// Best lattice node to enter the field from `p`, with total distance.
    fn entry(&self, p: Point2) -> Option<(usize, f64)> {
        self.grid
            .attachments(p)
            .into_iter()
            .map(|(n, c)| (n, c + self.dist[n]))
            .filter(|(_, d)| d.is_finite())
            .min_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)))
    }

    /// Shortest-path distance from `p` to the goal (infinity if unreachable).
    pub fn distance_from(&self, p: Point2) -> f64 {
        if p == self.goal {
            return 0.0;
        }
        self.entry(p).map_or(f64::INFINITY, |(_, d)| d)
    }

    /// Follows the shortest path from `p` and returns the farthest point
    /// within `lookahead` meters of path length that is directly reachable
    /// from `p` with the grid's clearance.
    pub fn carrot(&self, p: Point2, lookahead: f64) -> Option<Point2> {
        let (mut node, _) = self.entry(p)?;
        let mut target = self.grid.node_position(node);
        let mut travelled = p.distance(target);
        loop {
            let next = self.parent[node];
            let candidate = if next == usize::MAX {
                self.goal
            } else {
                self.grid.node_position(next)
            };
            travelled += self.grid.node_position(node).distance(candidate);
            if travelled > lookahead || !self.grid.segment_clear(p, candidate) {
                break;
            }
            target = candidate;
            if next == usize::MAX {
                break;
            }
            node = next;
        }
        Some(target)
    }
}

/// Reference path length between two free points at the planning resolution
/// and the simulator's wall clearance.
pub fn shortest_path_length(world: &World, a: Point2, b: Point2) -> Result<f64, EvalError> {
    Planner::new(world).shortest_path_length(a, b)
}

/// Reusable planner for one world.
#[derive(Clone, Debug)]
pub struct Planner<'w> {
    world: &'w World,
    grid: Arc<GridMap>,
}

impl<'w> Planner<'w> {
    pub fn new(world: &'w World) -> Self {
        Self {
            world,
            grid: Arc::new(GridMap::for_world(world, PLANNING_RESOLUTION, WALL_CLEARANCE)),
        }
    }

    /// Planner over a prebuilt lattice for the same world.
    pub fn with_grid(world: &'w World, grid: Arc<GridMap>) -> Self {
        Self { world, grid }
    }

    pub fn grid(&self) -> &Arc<GridMap> {
        &self.grid
    }

    pub fn check_endpoint(&self, p: Point2) -> Result<(), EvalError> {
        if self.world.floorplan.locate(p).is_none() {
            return Err(EvalError::OutsideRegions(p));
        }
        if self.world.walls.min_distance(p) < WALL_CLEARANCE - 1e-9 {
            return Err(EvalError::InWall(p));
        }
        Ok(())
    }

    pub fn shortest_path_length(&self, a: Point2, b: Point2) -> Result<f64, EvalError> {
        self.check_endpoint(a)?;
        self.check_endpoint(b)?;
        Ok(self.grid.path_length(a, b))
    }
}
