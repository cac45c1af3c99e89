use serde::{Deserialize, Serialize};

use super::{Category, PairRecord};
use crate::error::{Error, Result};
use crate::geom::{NeighborIndex, RigidTransform};
use crate::hypgen::Hypothesis;
use crate::metrics::{is_success, overlap_ratio_indexed, rotation_error, translation_error, SuccessThreshold};
use crate::tolerances::{PER_CATEGORY_CAP, SPLIT_OVERLAP, SPLIT_RE_DEG, TAU_OV};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiningConfig {
    /// Overlap at or above which a wrong transform is large-overlap.
    pub split_overlap: f64,
    /// Rotation error at or above which a wrong transform is large-error, degrees.
    pub split_re_deg: f64,
    pub per_category_cap: usize,
    pub tau_ov: f64,
    pub threshold: SuccessThreshold,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            split_overlap: SPLIT_OVERLAP,
            split_re_deg: SPLIT_RE_DEG,
            per_category_cap: PER_CATEGORY_CAP,
            tau_ov: TAU_OV,
            threshold: SuccessThreshold::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinedTransform {
    pub transform: RigidTransform,
    pub category: Category,
    pub rank: usize,
    pub re: f64,
    pub te: f64,
    pub overlap: f64,
}

/// Scans `hyps` in order and keeps wrong transforms, at most
/// `per_category_cap` per category.
///
/// A wrong transform goes to its overlap bucket (large when its overlap is at
/// least `split_overlap`). Once that bucket is full it goes to its error
/// bucket instead (large when RE is at least `split_re_deg`); when both are
/// full it is dropped.
pub fn mine_wrong_transforms(
    pair: &PairRecord,
    hyps: &[Hypothesis],
    cfg: &MiningConfig,
) -> Result<Vec<MinedTransform>> {
    let gt = &pair.ground_truth;
    let target = NeighborIndex::build(&pair.target.points)?;
    let cap = cfg.per_category_cap;
    let mut counts = [0usize; 4];
    let slot = |c: Category| Category::WRONG.iter().position(|w| *w == c).unwrap();
    let mut kept = Vec::new();
    let mut any_wrong = false;
    for h in hyps {
        if counts.iter().all(|&n| n >= cap) {
            break;
        }
        let t = &h.transform;
        if is_success(t, gt, &cfg.threshold) {
            continue;
        }
        any_wrong = true;
        let moved: Vec<_> = pair.source.points.iter().map(|p| t.apply(p)).collect();
        let overlap = overlap_ratio_indexed(&moved, &target, cfg.tau_ov);
        let re = rotation_error(&t.rotation, &gt.rotation);
        let te = translation_error(&t.translation, &gt.translation);
        let by_overlap = if overlap >= cfg.split_overlap {
            Category::LargeOverlap
        } else {
            Category::SmallOverlap
        };
        let by_error = if re >= cfg.split_re_deg {
            Category::LargeError
        } else {
            Category::SmallError
        };
        let Some(category) = [by_overlap, by_error].into_iter().find(|c| counts[slot(*c)] < cap) else {
            continue;
        };
        counts[slot(category)] += 1;
        kept.push(MinedTransform {
            transform: *t,
            category,
            rank: h.rank,
            re,
            te,
            overlap,
        });
    }
    if !any_wrong || kept.is_empty() {
        return Err(Error::NoWrongCandidates);
    }
    Ok(kept)
}
