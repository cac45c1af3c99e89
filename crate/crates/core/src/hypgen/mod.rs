//! Correspondences, spatial compatibility, and ranked rigid-transform
//! hypotheses.

mod compat;
mod generate;
mod io;

pub use compat::{first_order_compat, second_order_compat, BitMatrix, CountMatrix};
pub use generate::{generate_hypotheses, rank_by_inlier_count, HypGenConfig};
pub use io::{read_correspondences, read_hypotheses, write_correspondences, write_hypotheses};

use crate::geom::{RigidTransform, Vec3};

/// A putative match: `src` in the source frame, `tgt` in the target frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub src: Vec3,
    pub tgt: Vec3,
}

impl Correspondence {
    pub fn new(src: Vec3, tgt: Vec3) -> Self {
        Correspondence { src, tgt }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceSet {
    pub items: Vec<Correspondence>,
    /// Descriptor name, or `"synthetic"`.
    pub provenance: String,
}

impl CorrespondenceSet {
    pub fn new(items: Vec<Correspondence>, provenance: impl Into<String>) -> Self {
        CorrespondenceSet {
            items,
            provenance: provenance.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// A candidate transform with its consensus size and position in the
/// ranked list (0 = most inliers).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hypothesis {
    pub transform: RigidTransform,
    pub inlier_count: usize,
    pub rank: usize,
}

impl Hypothesis {
    /// Wraps externally supplied transforms, keeping their order as rank.
    pub fn from_transforms(ts: &[RigidTransform]) -> Vec<Hypothesis> {
        ts.iter()
            .enumerate()
            .map(|(rank, t)| Hypothesis {
                transform: *t,
                inlier_count: 0,
                rank,
            })
            .collect()
    }
}
