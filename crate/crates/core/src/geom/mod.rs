//! Points, rigid transforms, pose estimation, downsampling and neighbor
//! queries.

mod io;
mod kdtree;
mod transform;
mod voxel;

pub use io::{read_cloud, read_ply, read_xyz, write_ply, write_xyz};
pub(crate) use io::parse_vec3 as io_parse_vec3;
pub use kdtree::NeighborIndex;
pub use transform::{estimate_rigid, RigidTransform};
pub use voxel::voxel_downsample;

use crate::error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

/// An ordered set of 3D points in meters, with an optional sensor origin.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub viewpoint: Option<Vec3>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        PointCloud {
            points,
            viewpoint: None,
        }
    }

    pub fn with_viewpoint(points: Vec<Vec3>, viewpoint: Vec3) -> Self {
        PointCloud {
            points,
            viewpoint: Some(viewpoint),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Fails with [`Error::EmptyCloud`] on an empty cloud and
    /// [`Error::NonFinite`] on any non-finite coordinate.
    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let finite = self
            .points
            .iter()
            .chain(self.viewpoint.iter())
            .all(|p| p.iter().all(|c| c.is_finite()));
        if finite {
            Ok(())
        } else {
            Err(Error::NonFinite("point cloud coordinate"))
        }
    }

    /// Every coordinate (and the viewpoint) multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| p * factor).collect(),
            viewpoint: self.viewpoint.map(|v| v * factor),
        }
    }

    pub fn centroid(&self) -> Option<Vec3> {
        if self.points.is_empty() {
            return None;
        }
        let sum = self.points.iter().fold(Vec3::zeros(), |acc, p| acc + p);
        Some(sum / self.points.len() as f64)
    }
}

/// Squared Euclidean distance, summed in x, y, z order.
#[inline]
pub fn dist2(a: &Vec3, b: &Vec3) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    dx * dx + dy * dy + dz * dz
}

/// `t` applied to every point of `c`, viewpoint included, order preserved.
pub fn apply_transform(t: &RigidTransform, c: &PointCloud) -> Result<PointCloud> {
    if c.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let out = PointCloud {
        points: c.points.iter().map(|p| t.apply(p)).collect(),
        viewpoint: c.viewpoint.map(|v| t.apply(&v)),
    };
    if out.points.iter().all(|p| p.iter().all(|v| v.is_finite())) {
        Ok(out)
    } else {
        Err(Error::NonFinite("transformed point"))
    }
}

/// `a ∘ b`: applying the result equals applying `b` then `a`.
pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    a.compose(b)
}

pub fn invert(t: &RigidTransform) -> RigidTransform {
    t.inverse()
}

pub fn build_nn_index(c: &PointCloud) -> Result<NeighborIndex> {
    NeighborIndex::build(&c.points)
}
