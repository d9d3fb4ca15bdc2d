//! Vectorized floor plans: polygons, regions, containment queries, walls and
//! doorway adjacency. Coordinates are meters in a floor-local frame.

mod floorplan;
mod point;
mod polygon;
mod walls;

pub use floorplan::{FloorPlan, FloorPlanError, Region};
pub use point::{
    closest_point_on_segment, orientation, point_segment_distance, ray_segment_intersection,
    segment_segment_distance, segments_intersect, Bounds, Point2,
};
pub use polygon::{is_simple, signed_area, Containment, Polygon, PolygonError, BOUNDARY_EPS};
pub use walls::{
    extract_walls, extract_walls_with_tolerance, region_adjacency, Adjacency, Doorway, WallSegment,
    WallSet, COINCIDENCE_TOL, DOORWAY_MIN_WIDTH,
};

pub fn parse_floorplan(text: &str) -> Result<FloorPlan, FloorPlanError> {
    FloorPlan::parse(text)
}

pub fn serialize_floorplan(fp: &FloorPlan) -> String {
    fp.to_json()
}

pub fn point_in_polygon(p: Point2, poly: &Polygon) -> Containment {
    poly.contains(p)
}

pub fn locate_region(fp: &FloorPlan, p: Point2) -> Option<&Region> {
    fp.locate(p)
}
