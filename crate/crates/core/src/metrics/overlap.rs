use super::order_free_sum;
use crate::error::{Error, Result};
use crate::geom::{NeighborIndex, PointCloud, RigidTransform, Vec3};

/// Fraction of `t(p)` whose nearest neighbor in `q` lies within `tau_ov`.
pub fn overlap_ratio(p: &PointCloud, q: &PointCloud, t: &RigidTransform, tau_ov: f64) -> Result<f64> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let index = NeighborIndex::build(&q.points)?;
    let moved: Vec<Vec3> = p.points.iter().map(|x| t.apply(x)).collect();
    Ok(overlap_ratio_indexed(&moved, &index, tau_ov))
}

/// Overlap of already-transformed points against a prebuilt target index.
pub fn overlap_ratio_indexed(points: &[Vec3], target: &NeighborIndex, tau_ov: f64) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let hits = points
        .iter()
        .filter(|x| target.nearest(x).1 <= tau_ov)
        .count();
    hits as f64 / points.len() as f64
}

/// Mean of the two directional means of nearest cross-cloud distances, each
/// distance clamped at `tau_c`.
pub fn truncated_chamfer(p_prime: &PointCloud, q: &PointCloud, tau_c: f64) -> Result<f64> {
    if p_prime.is_empty() || q.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let pi = NeighborIndex::build(&p_prime.points)?;
    let qi = NeighborIndex::build(&q.points)?;
    Ok(truncated_chamfer_indexed(&pi, &qi, tau_c))
}

pub fn truncated_chamfer_indexed(a: &NeighborIndex, b: &NeighborIndex, tau_c: f64) -> f64 {
    let directional = |from: &NeighborIndex, to: &NeighborIndex| {
        let mut d: Vec<f64> = from
            .points()
            .iter()
            .map(|x| to.nearest(x).1.min(tau_c))
            .collect();
        order_free_sum(&mut d) / d.len() as f64
    };
    0.5 * (directional(a, b) + directional(b, a))
}
