//! Numerical tolerances and default thresholds used across the crate.
//!
//! Every threshold here is a default; the runtime configuration structs
//! ([`crate::pipeline::PipelineConfig`], [`crate::decision::FeatureConfig`],
//! [`crate::datasetgen::GenConfig`]) copy these values and may override them.

/// ‖RᵀR − I‖∞ bound for a valid rotation.
pub const ROTATION_ORTHO_TOL: f64 = 1e-9;
/// |det(R) − 1| bound for a valid rotation.
pub const ROTATION_DET_TOL: f64 = 1e-9;
/// Second singular value below this fraction of the first marks a degenerate
/// cross-covariance in rigid estimation.
pub const DEGENERATE_SV_RATIO: f64 = 1e-12;

/// Success threshold on rotation error, degrees.
pub const SUCCESS_MAX_RE_DEG: f64 = 15.0;
/// Success threshold on translation error, meters.
pub const SUCCESS_MAX_TE_M: f64 = 0.30;

/// Voxel size for downsampling, meters.
pub const VOXEL_SIZE: f64 = 0.05;
/// First-order compatibility threshold, meters.
pub const TAU_SC: f64 = 0.10;
/// Inlier residual threshold, meters.
pub const TAU_IN: f64 = 0.10;
/// Overlap distance threshold, meters.
pub const TAU_OV: f64 = 0.10;
/// Truncation distance for the chamfer feature, meters.
pub const TAU_C: f64 = 0.30;
/// Free-space grid resolution for the sight-view check, meters.
pub const SVC_GRID: f64 = 0.05;
/// Maximum tolerated free-space violation ratio.
pub const SVC_MAX_VIOLATION: f64 = 0.05;
/// Neighborhood size for the tag-mixing feature.
pub const TAG_MIX_K: usize = 10;

/// Hypotheses per pair.
pub const HYPOTHESIS_COUNT: usize = 100;
/// Candidate cap after sight-view filtering.
pub const CANDIDATE_CAP: usize = 100;
/// Early-truncation score threshold.
pub const SCORE_THRESHOLD: f64 = 0.6;
/// Decision threshold for classifying an outcome or a record.
pub const DECISION_THRESHOLD: f64 = 0.5;

/// Duplicate hypothesis suppression: rotation tolerance, degrees.
pub const DUPLICATE_RE_DEG: f64 = 1.0;
/// Duplicate hypothesis suppression: translation tolerance, meters.
pub const DUPLICATE_TE_M: f64 = 0.03;
/// Sampling attempts per requested hypothesis.
pub const ATTEMPTS_PER_HYPOTHESIS: usize = 20;

/// Overlap split between large- and small-overlap wrong transforms.
pub const SPLIT_OVERLAP: f64 = 0.30;
/// Rotation-error split between large- and small-error wrong transforms, degrees.
pub const SPLIT_RE_DEG: f64 = 45.0;
/// Minimum GT overlap for a pair to be admitted to the dataset.
pub const MIN_PAIR_OVERLAP: f64 = 0.10;
/// Wrong records kept per category per pair.
pub const PER_CATEGORY_CAP: usize = 2;
