use std::collections::HashMap;

use super::{PointCloud, Vec3};
use crate::error::{Error, Result};

/// Integer voxel coordinates of `p` for cell size `voxel`.
#[inline]
pub(crate) fn voxel_key(p: &Vec3, voxel: f64) -> (i64, i64, i64) {
    (
        (p.x / voxel).floor() as i64,
        (p.y / voxel).floor() as i64,
        (p.z / voxel).floor() as i64,
    )
}

/// One centroid per occupied voxel, emitted in order of first occupancy.
pub fn voxel_downsample(c: &PointCloud, voxel: f64) -> Result<PointCloud> {
    if !(voxel > 0.0) || !voxel.is_finite() {
        return Err(Error::NonPositiveVoxel(voxel));
    }
    let mut slot: HashMap<(i64, i64, i64), usize> = HashMap::with_capacity(c.len());
    let mut acc: Vec<(Vec3, usize)> = Vec::new();
    for p in &c.points {
        let key = voxel_key(p, voxel);
        let i = *slot.entry(key).or_insert_with(|| {
            acc.push((Vec3::zeros(), 0));
            acc.len() - 1
        });
        acc[i].0 += p;
        acc[i].1 += 1;
    }
    Ok(PointCloud {
        points: acc.into_iter().map(|(s, n)| s / n as f64).collect(),
        viewpoint: c.viewpoint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn close_points_collapse_to_centroid() {
        let c = PointCloud::new(vec![Vec3::new(0.01, 0.01, 0.01), Vec3::new(0.02, 0.01, 0.01)]);
        let d = voxel_downsample(&c, 0.05).unwrap();
        assert_eq!(d.len(), 1);
        assert!((d.points[0] - Vec3::new(0.015, 0.01, 0.01)).norm() < 1e-15);
    }

    #[test]
    fn fine_voxel_keeps_every_point() {
        let c = PointCloud::new(vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(0.31, 0.0, 0.0),
            Vec3::new(0.0, 0.77, 0.1),
        ]);
        let d = voxel_downsample(&c, 0.05).unwrap();
        assert_eq!(d.points, c.points);
    }

    #[test]
    fn grid_at_twice_the_voxel_pitch() {
        // Cell hashing oracle: count distinct keys directly.
        let mut pts = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                for k in 0..10 {
                    pts.push(Vec3::new(0.1 * i as f64 + 0.01, 0.1 * j as f64 + 0.01, 0.1 * k as f64 + 0.01));
                }
            }
        }
        let oracle: HashSet<_> = pts.iter().map(|p| voxel_key(p, 0.05)).collect();
        let d = voxel_downsample(&PointCloud::new(pts), 0.05).unwrap();
        assert_eq!(oracle.len(), 1000);
        assert_eq!(d.len(), 1000);
    }

    #[test]
    fn rejects_non_positive_voxel() {
        let c = PointCloud::new(vec![Vec3::zeros()]);
        assert!(matches!(voxel_downsample(&c, 0.0), Err(Error::NonPositiveVoxel(_))));
        assert!(matches!(voxel_downsample(&c, -1.0), Err(Error::NonPositiveVoxel(_))));
    }
}
