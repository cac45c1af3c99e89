//! Sight-view constraint: a transformed source point must not sit inside
//! space the target sensor observed as empty.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{PointCloud, RigidTransform, Vec3};
use crate::tolerances::{SVC_GRID, SVC_MAX_VIOLATION};

type Key = (i64, i64, i64);

#[inline]
fn key(p: &Vec3, grid: f64) -> Key {
    (
        (p.x / grid).floor() as i64,
        (p.y / grid).floor() as i64,
        (p.z / grid).floor() as i64,
    )
}

/// Voxels swept by the rays from a sensor origin to each observed point.
#[derive(Debug, Clone)]
pub struct FreeSpaceGrid {
    grid: f64,
    free: HashSet<Key>,
    surface: HashSet<Key>,
}

impl FreeSpaceGrid {
    pub fn build(points: &[Vec3], viewpoint: &Vec3, grid: f64) -> Result<Self> {
        if !(grid > 0.0) {
            return Err(Error::InvalidConfig(format!("SVC grid must be positive, got {grid}")));
        }
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let surface: HashSet<Key> = points.iter().map(|p| key(p, grid)).collect();
        let mut free = HashSet::new();
        for p in points {
            traverse(viewpoint, p, grid, |k| {
                if !surface.contains(&k) {
                    free.insert(k);
                }
            });
        }
        Ok(FreeSpaceGrid { grid, free, surface })
    }

    /// Builds from a cloud's own viewpoint.
    pub fn from_cloud(q: &PointCloud, grid: f64) -> Result<Self> {
        let vp = q.viewpoint.ok_or(Error::MissingViewpoint)?;
        Self::build(&q.points, &vp, grid)
    }

    pub fn grid(&self) -> f64 {
        self.grid
    }

    pub fn is_free(&self, p: &Vec3) -> bool {
        self.free.contains(&key(p, self.grid))
    }

    /// A point violates when its voxel is free and no surface voxel is in
    /// its 26-neighborhood.
    pub fn violates(&self, p: &Vec3) -> bool {
        let k = key(p, self.grid);
        if !self.free.contains(&k) {
            return false;
        }
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if self.surface.contains(&(k.0 + dx, k.1 + dy, k.2 + dz)) {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn violation_ratio(&self, points: &[Vec3]) -> f64 {
        if points.is_empty() {
            return 0.0;
        }
        let n = points.iter().filter(|p| self.violates(p)).count();
        n as f64 / points.len() as f64
    }

    pub fn free_voxel_count(&self) -> usize {
        self.free.len()
    }
}

/// Calls `visit` on every voxel crossed by the segment `from → to`, stopping
/// before the voxel that contains `to` (3D DDA).
fn traverse(from: &Vec3, to: &Vec3, grid: f64, mut visit: impl FnMut(Key)) {
    let start = key(from, grid);
    let end = key(to, grid);
    let dir = to - from;
    let mut cur = [start.0, start.1, start.2];
    let target = [end.0, end.1, end.2];
    let mut step = [0i64; 3];
    let mut t_max = [f64::INFINITY; 3];
    let mut t_delta = [f64::INFINITY; 3];
    for a in 0..3 {
        if dir[a] > 0.0 {
            step[a] = 1;
            t_max[a] = (((cur[a] + 1) as f64) * grid - from[a]) / dir[a];
            t_delta[a] = grid / dir[a];
        } else if dir[a] < 0.0 {
            step[a] = -1;
            t_max[a] = ((cur[a] as f64) * grid - from[a]) / dir[a];
            t_delta[a] = -grid / dir[a];
        }
    }
    let budget: i64 = (0..3).map(|a| (target[a] - cur[a]).abs()).sum::<i64>() + 1;
    for _ in 0..budget {
        if cur == target {
            return;
        }
        visit((cur[0], cur[1], cur[2]));
        let a = if t_max[0] <= t_max[1] && t_max[0] <= t_max[2] {
            0
        } else if t_max[1] <= t_max[2] {
            1
        } else {
            2
        };
        if t_max[a] > 1.0 {
            return;
        }
        cur[a] += step[a];
        t_max[a] += t_delta[a];
    }
}

/// Keeps the hypothesis `t` iff the share of `t(p)` lying in observed free
/// space of `q` is at most `max_violation`. Both clouds need viewpoints.
pub fn svc_check(
    p: &PointCloud,
    q: &PointCloud,
    t: &RigidTransform,
    grid: f64,
    max_violation: f64,
) -> Result<bool> {
    if p.viewpoint.is_none() {
        return Err(Error::MissingViewpoint);
    }
    let free = FreeSpaceGrid::from_cloud(q, grid)?;
    let moved: Vec<Vec3> = p.points.iter().map(|x| t.apply(x)).collect();
    Ok(free.violation_ratio(&moved) <= max_violation)
}

/// Sight-view filter settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvcConfig {
    pub enabled: bool,
    pub grid: f64,
    pub max_violation: f64,
}

impl Default for SvcConfig {
    fn default() -> Self {
        SvcConfig {
            enabled: true,
            grid: SVC_GRID,
            max_violation: SVC_MAX_VIOLATION,
        }
    }
}

impl SvcConfig {
    /// `Ok(true)` unconditionally when disabled.
    pub fn check(&self, p: &PointCloud, q: &PointCloud, t: &RigidTransform) -> Result<bool> {
        if !self.enabled {
            return Ok(true);
        }
        svc_check(p, q, t, self.grid, self.max_violation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Wall at x = 3 seen from the origin.
    fn wall_scan() -> PointCloud {
        let mut pts = Vec::new();
        for i in 0..40 {
            for j in 0..40 {
                pts.push(Vec3::new(3.0, -1.0 + 0.05 * i as f64 + 0.013, -1.0 + 0.05 * j as f64 + 0.017));
            }
        }
        PointCloud::with_viewpoint(pts, Vec3::new(0.01, 0.02, 0.03))
    }

    /// Independent ray marcher: fine fixed steps along every segment.
    fn marched_free(q: &PointCloud, grid: f64) -> HashSet<Key> {
        let vp = q.viewpoint.unwrap();
        let surface: HashSet<Key> = q.points.iter().map(|p| key(p, grid)).collect();
        let mut free = HashSet::new();
        for p in &q.points {
            let end = key(p, grid);
            let len = (p - vp).norm();
            let steps = (len / (grid / 50.0)).ceil() as usize;
            for s in 0..steps {
                let x = vp + (p - vp) * (s as f64 / steps as f64);
                let k = key(&x, grid);
                if k != end && !surface.contains(&k) {
                    free.insert(k);
                }
            }
        }
        free
    }

    #[test]
    fn dda_covers_marched_voxels() {
        let q = wall_scan();
        let grid = 0.05;
        let fs = FreeSpaceGrid::from_cloud(&q, grid).unwrap();
        let marched = marched_free(&q, grid);
        let missing = marched.iter().filter(|k| !fs.free.contains(k)).count();
        assert_eq!(missing, 0);
        // DDA may add corner voxels a finite-step marcher skips, never many.
        assert!(fs.free.len() as f64 <= marched.len() as f64 * 1.02);
    }

    #[test]
    fn ground_truth_passes() {
        let q = wall_scan();
        let gt = RigidTransform::from_axis_angle(&Vec3::new(0.2, 1.0, 0.1), 0.7, Vec3::new(0.5, -0.3, 1.0));
        let mut p = crate::geom::apply_transform(&gt.inverse(), &q).unwrap();
        p.viewpoint = Some(gt.inverse().apply(&Vec3::new(0.5, 0.0, 0.0)));
        let free = FreeSpaceGrid::from_cloud(&q, 0.05).unwrap();
        let moved: Vec<_> = p.points.iter().map(|x| gt.apply(x)).collect();
        assert!(free.violation_ratio(&moved) < 1e-9);
        assert!(svc_check(&p, &q, &gt, 0.05, 0.05).unwrap());
    }

    #[test]
    fn source_in_front_of_target_surface_fails() {
        let q = wall_scan();
        let p = PointCloud::with_viewpoint(q.points.clone(), Vec3::zeros());
        let wrong = RigidTransform::from_translation(Vec3::new(-0.3, 0.0, 0.0));
        let marched = marched_free(&q, 0.05);
        let moved: Vec<_> = p.points.iter().map(|x| wrong.apply(x)).collect();
        let oracle = moved.iter().filter(|x| marched.contains(&key(x, 0.05))).count();
        assert!(oracle as f64 / moved.len() as f64 > 0.5);
        assert!(!svc_check(&p, &q, &wrong, 0.05, 0.05).unwrap());
    }

    #[test]
    fn disabled_always_passes_and_missing_viewpoint_errors() {
        let q = wall_scan();
        let p = PointCloud::new(q.points.clone());
        let wrong = RigidTransform::from_translation(Vec3::new(-1.5, 0.0, 0.0));
        let cfg = SvcConfig {
            enabled: false,
            ..SvcConfig::default()
        };
        assert!(cfg.check(&p, &q, &wrong).unwrap());
        assert!(matches!(
            SvcConfig::default().check(&p, &q, &wrong),
            Err(Error::MissingViewpoint)
        ));
    }
}
