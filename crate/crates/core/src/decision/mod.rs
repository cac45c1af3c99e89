//! Scoring of tagged merged clouds: whether a hypothesis that produced a
//! merged cloud is a correct registration.
//!
//! The internal scorer is a logistic model over six geometric features of
//! the merged cloud. Any other classifier can be plugged in through
//! [`Scorer`], including a child process speaking the line protocol in
//! [`ExternalScorer`].

mod external;
mod features;
mod merged;
mod model;
mod train;

pub use external::{ExternalScorer, FallbackScorer};
pub use features::{extract_features, FeatureConfig, FeatureVector, TargetContext, FEATURE_NAMES};
pub use merged::{merge_clouds, read_merged, write_merged, Tag, TaggedMergedCloud, TaggedPoint};
pub use model::{logits_to_score, ScoreLogits, ScorerModel};
pub use train::{
    evaluate_scorer, evaluate_scores, featurize, train_on_features, train_scorer, AccuracyReport,
    Confusion, Label, Sample, TrainConfig,
};

use crate::error::Result;
use crate::geom::{PointCloud, RigidTransform};

/// A source/target pair prepared for scoring many hypotheses.
///
/// Scorers may cache target-side structures here. The cache is built for the
/// pair's `scale` and the first feature configuration that asks for it.
pub struct PreparedPair<'a> {
    pub source: &'a PointCloud,
    pub target: &'a PointCloud,
    pub scale: f64,
    pub(crate) target_cache: std::sync::OnceLock<Option<(FeatureConfig, TargetContext)>>,
}

impl<'a> PreparedPair<'a> {
    pub fn new(source: &'a PointCloud, target: &'a PointCloud, scale: f64) -> Self {
        PreparedPair {
            source,
            target,
            scale,
            target_cache: std::sync::OnceLock::new(),
        }
    }

    /// `{t(P), Q}` with tags and viewpoints, unscaled.
    pub fn merged(&self, t: &RigidTransform) -> Result<TaggedMergedCloud> {
        let moved = crate::geom::apply_transform(t, self.source)?;
        merge_clouds(&moved, self.target)
    }
}

/// Maps a merged cloud to the probability that its transform is correct.
pub trait Scorer: Sync {
    /// Scores `scale · m`.
    fn score_merged(&self, m: &TaggedMergedCloud, scale: f64) -> Result<f64>;

    /// Scores hypothesis `t` for a prepared pair. Must equal
    /// `score_merged(pair.merged(t), pair.scale)`.
    fn score_hypothesis(&self, pair: &PreparedPair<'_>, t: &RigidTransform) -> Result<f64> {
        self.score_merged(&pair.merged(t)?, pair.scale)
    }
}
