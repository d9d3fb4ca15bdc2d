use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use super::point::{orientation, point_segment_distance, segments_intersect, Bounds, Point2};

/// Distance below which a query point counts as lying on a polygon edge.
pub const BOUNDARY_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Containment {
    Inside,
    OnBoundary,
    Outside,
}

impl Containment {
    /// Inside or on the boundary.
    pub fn is_covered(self) -> bool {
        !matches!(self, Containment::Outside)
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum PolygonError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("vertex {0} is not finite")]
    NonFinite(usize),
    #[error("polygon has zero area")]
    ZeroArea,
    #[error("polygon is self-intersecting")]
    SelfIntersecting,
}

/// A simple polygon stored counter-clockwise with implicit closure.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point2>,
}

impl Polygon {
    /// Validates the ring and normalizes it to counter-clockwise order. A
    /// repeated closing vertex is dropped. Clockwise input is reversed while
    /// keeping the first vertex in place.
    pub fn new(mut vertices: Vec<Point2>) -> Result<Self, PolygonError> {
        if vertices.len() > 3 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(PolygonError::TooFewVertices(vertices.len()));
        }
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(PolygonError::NonFinite(i));
        }
        let area = signed_area(&vertices);
        if area == 0.0 || !area.is_finite() {
            return Err(PolygonError::ZeroArea);
        }
        if !is_simple(&vertices) {
            return Err(PolygonError::SelfIntersecting);
        }
        if area < 0.0 {
            vertices[1..].reverse();
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edges in ring order, `(v[i], v[i+1])`, closing back to `v[0]`.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices).abs()
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.distance(b)).sum()
    }

    pub fn bounds(&self) -> Bounds {
        let mut b = Bounds::empty();
        for &v in &self.vertices {
            b.include(v);
        }
        b
    }

    /// Area centroid.
    pub fn centroid(&self) -> Point2 {
        let mut cx = 0.0;
        let mut cy = 0.0;
        let mut a2 = 0.0;
        // Shift to the first vertex for numerical stability.
        let o = self.vertices[0];
        for (p, q) in self.edges() {
            let (p, q) = (p - o, q - o);
            let c = p.cross(q);
            a2 += c;
            cx += (p.x + q.x) * c;
            cy += (p.y + q.y) * c;
        }
        Point2::new(o.x + cx / (3.0 * a2), o.y + cy / (3.0 * a2))
    }

    /// Distance from `p` to the nearest edge.
    pub fn boundary_distance(&self, p: Point2) -> f64 {
        self.edges()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn winding_number(&self, p: Point2) -> i32 {
        let mut wn = 0;
        for (a, b) in self.edges() {
            if a.y <= p.y {
                if b.y > p.y && orientation(a, b, p) > 0.0 {
                    wn += 1;
                }
            } else if b.y <= p.y && orientation(a, b, p) < 0.0 {
                wn -= 1;
            }
        }
        wn
    }

    /// Point containment by winding number. Points within [`BOUNDARY_EPS`] of
    /// an edge are reported as on the boundary.
    pub fn contains(&self, p: Point2) -> Containment {
        if self.boundary_distance(p) <= BOUNDARY_EPS {
            Containment::OnBoundary
        } else if self.winding_number(p) != 0 {
            Containment::Inside
        } else {
            Containment::Outside
        }
    }

    /// Signed distance to the boundary: positive inside, negative outside.
    pub fn signed_distance(&self, p: Point2) -> f64 {
        let d = self.boundary_distance(p);
        if self.winding_number(p) != 0 {
            d
        } else {
            -d
        }
    }

    /// The interior point farthest from the boundary (pole of inaccessibility),
    /// found by quadtree refinement down to `precision` meters.
    pub fn pole_of_inaccessibility(&self, precision: f64) -> Point2 {
        let b = self.bounds();
        let cell_size = b.width().min(b.height());
        if cell_size <= 0.0 {
            return b.min;
        }
        let mut h = cell_size / 2.0;
        let mut queue = BinaryHeap::new();
        let mut x = b.min.x;
        while x < b.max.x {
            let mut y = b.min.y;
            while y < b.max.y {
                queue.push(Cell::new(Point2::new(x + h, y + h), h, self));
                y += cell_size;
            }
            x += cell_size;
        }

        let mut best = Cell::new(self.centroid(), 0.0, self);
        let bbox_cell = Cell::new(
            Point2::new(b.min.x + b.width() / 2.0, b.min.y + b.height() / 2.0),
            0.0,
            self,
        );
        if bbox_cell.d > best.d {
            best = bbox_cell;
        }

        while let Some(cell) = queue.pop() {
            let (center, half, max) = (cell.c, cell.h, cell.max);
            if cell.d > best.d {
                best = cell;
            }
            if max - best.d <= precision {
                continue;
            }
            h = half / 2.0;
            for (dx, dy) in [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)] {
                queue.push(Cell::new(
                    Point2::new(center.x + dx * h, center.y + dy * h),
                    h,
                    self,
                ));
            }
        }
        best.c
    }
}

struct Cell {
    c: Point2,
    h: f64,
    d: f64,
    max: f64,
}

impl Cell {
    fn new(c: Point2, h: f64, poly: &Polygon) -> Self {
        let d = poly.signed_distance(c);
        Self {
            c,
            h,
            d,
            max: d + h * std::f64::consts::SQRT_2,
        }
    }
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Cell {}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.max
            .total_cmp(&other.max)
            .then_with(|| other.c.x.total_cmp(&self.c.x))
            .then_with(|| other.c.y.total_cmp(&self.c.y))
    }
}

/// Shoelace signed area; positive for counter-clockwise rings.
pub fn signed_area(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    let o = vertices[0];
    let mut s = 0.0;
    for i in 0..n {
        let p = vertices[i] - o;
        let q = vertices[(i + 1) % n] - o;
        s += p.cross(q);
    }
    s / 2.0
}

/// True when the closed ring has no repeated vertices, no zero-length edges,
/// no touching non-adjacent edges and no folded-back adjacent edges.
pub fn is_simple(vertices: &[Point2]) -> bool {
    let n = vertices.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        if vertices[i] == vertices[(i + 1) % n] {
            return false;
        }
    }
    for i in 0..n {
        let a1 = vertices[i];
        let a2 = vertices[(i + 1) % n];
        for j in (i + 1)..n {
            let b1 = vertices[j];
            let b2 = vertices[(j + 1) % n];
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // Shared vertex is expected; a fold-back puts the far endpoint
                // of one edge onto the other edge.
                let (shared, pa, pb) = if j == i + 1 {
                    (a2, a1, b2)
                } else {
                    (a1, a2, b1)
                };
                if orientation(pa, shared, pb) == 0.0 && (pa - shared).dot(pb - shared) > 0.0 {
                    return false;
                }
            } else if segments_intersect(a1, a2, b1, b2) {
                return false;
            }
        }
    }
    true
}
