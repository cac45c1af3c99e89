//! Point cloud registration by classifier-based hypothesis evaluation.
//!
//! Rigid-transform hypotheses are generated from noisy correspondences
//! ([`hypgen`]), each hypothesis is applied to the source cloud and merged
//! with the target, and the tagged merged cloud is scored by a trained
//! classifier ([`decision`]) instead of by its inlier count. [`pipeline`]
//! runs the filtered, early-truncating scan over ranked hypotheses;
//! [`datasetgen`] mines hard negatives to train the classifier; [`bench`]
//! provides synthetic scenes with ground truth, benchmark reports and the
//! command line front end.




pub mod bench;
pub mod cli;
pub mod datasetgen;
pub mod decision;
pub mod error;
pub mod geom;
pub mod hypgen;
pub mod metrics;
pub mod pipeline;
pub mod seeding;

pub mod tolerances;

pub use error::{Error, Result};
pub use geom::{PointCloud, RigidTransform, Vec3};
