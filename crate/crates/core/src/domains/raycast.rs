//! Grid raycasting for the simulated 1-D LiDAR.

use super::grid::{Cell, GridMap, LidarSpec, Pose};
use crate::belief::ObservationId;

/// Number of cell transitions from `origin` along `angle_deg` (world frame,
/// counter-clockwise from east) until an occupied cell is entered, capped at
/// `max_steps`.
///
/// Amanatides–Woo traversal from the cell centre. A ray crossing a cell
/// corner exactly moves diagonally in a single step.
pub fn cast_ray(map: &GridMap, origin: Cell, angle_deg: f64, max_steps: u32) -> u32 {
    let (dx, dy) = ray_direction(angle_deg);
    let step_x = dx.signum() as i32;
    let step_y = dy.signum() as i32;
    let t_delta_x = if dx != 0.0 {
        1.0 / dx.abs()
    } else {
        f64::INFINITY
    };
    let t_delta_y = if dy != 0.0 {
        1.0 / dy.abs()
    } else {
        f64::INFINITY
    };
    // From the cell centre the first boundary is half a cell away.
    let mut t_max_x = 0.5 * t_delta_x;
    let mut t_max_y = 0.5 * t_delta_y;
    let mut cell = origin;
    for steps in 1..=max_steps {
        let diff = t_max_x - t_max_y;
        if diff.abs() <= 1e-9 * t_max_x.min(t_max_y).max(1.0) {
            cell = cell.offset(step_x, step_y);
            t_max_x += t_delta_x;
            t_max_y += t_delta_y;
        } else if diff < 0.0 {
            cell = cell.offset(step_x, 0);
            t_max_x += t_delta_x;
        } else {
            cell = cell.offset(0, step_y);
            t_max_y += t_delta_y;
        }
        if map.is_occupied(cell) {
            return steps;
        }
    }
    max_steps
}

/// Unit direction in grid coordinates (rows grow downward). Multiples of
/// 45 degrees map to exact lattice directions.
fn ray_direction(angle_deg: f64) -> (f64, f64) {
    let norm = angle_deg.rem_euclid(360.0);
    let octant = norm / 45.0;
    if (octant - octant.round()).abs() < 1e-9 {
        let (ix, iy) = super::grid::HEADING_VECTORS[(octant.round() as usize) % 8];
        let len = ((ix * ix + iy * iy) as f64).sqrt();
        return (ix as f64 / len, iy as f64 / len);
    }
    let rad = norm.to_radians();
    (rad.cos(), -rad.sin())
}

/// Quantized range reading for every ray of `spec` from `pose`.
pub fn scan(map: &GridMap, pose: Pose, spec: &LidarSpec) -> Vec<u32> {
    let heading_deg = pose.heading as f64 * 45.0;
    spec.rays
        .iter()
        .map(|offset| {
            cast_ray(map, pose.cell, heading_deg + offset, spec.max_range) / spec.quantization
        })
        .collect()
}

/// Encodes a scan as one observation id (mixed radix over range bins).
pub fn encode_scan(readings: &[u32], spec: &LidarSpec) -> ObservationId {
    let bins = spec.bins();
    let code = readings.iter().fold(0u64, |acc, r| acc * bins + *r as u64);
    ObservationId::from_code(code)
}

/// Raycast observation for `pose`.
pub fn raycast(map: &GridMap, pose: Pose, spec: &LidarSpec) -> ObservationId {
    encode_scan(&scan(map, pose, spec), spec)
}
