use crate::geometry::{is_simple, signed_area, FloorPlan, Point2, Polygon, Region};

use super::noise::{standard_normal, NoiseDomain};

/// Redraws allowed per vertex before it is left unperturbed.
pub const MAX_JITTER_RETRIES: u32 = 16;

/// Displaces every polygon vertex by i.i.d. isotropic Gaussian noise with
/// standard deviation `sigma` meters per axis.
///
/// A displacement that would make its polygon non-simple (or flip its
/// orientation) is redrawn, up to [`MAX_JITTER_RETRIES`] times. Region ids and
/// types are preserved.
pub fn jitter_floorplan(fp: &FloorPlan, sigma: f64, seed: u64) -> FloorPlan {
    if sigma == 0.0 {
        return fp.clone();
    }
    let regions: Vec<Region> = fp
        .regions()
        .iter()
        .enumerate()
        .map(|(ri, region)| {
            let mut vertices: Vec<Point2> = region.polygon.vertices().to_vec();
            for vi in 0..vertices.len() {
                let original = vertices[vi];
                let index = ((ri as u64) << 32) | vi as u64;
                for attempt in 0..MAX_JITTER_RETRIES {
                    let dx = sigma * standard_normal(seed, NoiseDomain::Jitter, index, 2 * attempt);
                    let dy =
                        sigma * standard_normal(seed, NoiseDomain::Jitter, index, 2 * attempt + 1);
                    vertices[vi] = Point2::new(original.x + dx, original.y + dy);
                    if signed_area(&vertices) > 0.0 && is_simple(&vertices) {
                        break;
                    }
                    vertices[vi] = original;
                }
            }
            let polygon = Polygon::new(vertices).unwrap_or_else(|_| region.polygon.clone());
            Region::new(region.id, region.region_type.clone(), polygon)
        })
        .collect();
    fp.with_regions(regions)
        .expect("jitter preserves ids, types and a non-degenerate extent")
}

/// Jitter draw for one vertex and attempt, exposed for statistical checks.
pub fn vertex_displacement(sigma: f64, seed: u64, region_index: usize, vertex: usize, attempt: u32) -> Point2 {
    let index = ((region_index as u64) << 32) | vertex as u64;
    Point2::new(
        sigma * standard_normal(seed, NoiseDomain::Jitter, index, 2 * attempt),
        sigma * standard_normal(seed, NoiseDomain::Jitter, index, 2 * attempt + 1),
    )
}
