//! Training data for the scorer: correct alignments plus hard wrong
//! transforms mined from ranked hypothesis lists, labeled and categorized.

mod corrupt;
mod mine;
mod store;

pub use corrupt::{decoy_transform, synthetic_correspondences, CorruptorConfig};
pub use mine::{mine_wrong_transforms, MinedTransform, MiningConfig};
pub use store::{load_dataset, save_dataset, MANIFEST_NAME};

use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decision::{merge_clouds, Label, Sample, TaggedMergedCloud};
use crate::error::{Error, Result};
use crate::geom::{apply_transform, voxel_downsample, PointCloud, RigidTransform};
use crate::hypgen::{generate_hypotheses, CorrespondenceSet, HypGenConfig};
use crate::metrics::{is_success, overlap_ratio, rotation_error, translation_error};
use crate::seeding::{derive_seed, item_rng};
use crate::tolerances::{MIN_PAIR_OVERLAP, VOXEL_SIZE};

/// Source and target with known ground truth mapping source into target.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord {
    pub source: PointCloud,
    pub target: PointCloud,
    pub ground_truth: RigidTransform,
    pub pair_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    Correct,
    LargeOverlap,
    SmallOverlap,
    LargeError,
    SmallError,
}

impl Category {
    pub const WRONG: [Category; 4] = [
        Category::LargeOverlap,
        Category::SmallOverlap,
        Category::LargeError,
        Category::SmallError,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Correct => "correct",
            Category::LargeOverlap => "large-overlap",
            Category::SmallOverlap => "small-overlap",
            Category::LargeError => "large-error",
            Category::SmallError => "small-error",
        }
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        [Category::Correct]
            .into_iter()
            .chain(Category::WRONG)
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown category `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    /// Unique record id, `<pair id>-<nn>`.
    pub id: String,
    pub pair_id: String,
    pub merged: TaggedMergedCloud,
    pub label: Label,
    pub category: Category,
    pub re: f64,
    pub te: f64,
    pub overlap: f64,
    pub transform: RigidTransform,
    pub ground_truth: RigidTransform,
}

impl DatasetRecord {
    pub fn sample(&self) -> Sample<'_> {
        Sample {
            merged: &self.merged,
            label: self.label,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    /// Downsampling voxel applied to both clouds; 0 disables it.
    pub voxel: f64,
    /// Pairs whose ground-truth overlap is not above this are skipped.
    pub min_overlap: f64,
    pub hypgen: HypGenConfig,
    pub mining: MiningConfig,
    pub corruptor: CorruptorConfig,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            voxel: VOXEL_SIZE,
            min_overlap: MIN_PAIR_OVERLAP,
            hypgen: HypGenConfig::default(),
            mining: MiningConfig::default(),
            corruptor: CorruptorConfig::default(),
        }
    }
}

/// Where each pair's correspondences come from.
#[derive(Debug, Clone, Copy)]
pub enum CorrespondenceSource<'a> {
    /// Generated by the corruptor from the downsampled clouds.
    Synthetic,
    /// One set per pair, in pair order.
    Provided(&'a [CorrespondenceSet]),
}

fn downsample(c: &PointCloud, voxel: f64) -> Result<PointCloud> {
    if voxel == 0.0 {
        Ok(c.clone())
    } else {
        voxel_downsample(c, voxel)
    }
}

fn pair_records(
    pair: &PairRecord,
    provided: Option<&CorrespondenceSet>,
    cfg: &GenConfig,
    seed: u64,
) -> Result<Vec<DatasetRecord>> {
    let source = downsample(&pair.source, cfg.voxel)?;
    let target = downsample(&pair.target, cfg.voxel)?;
    let gt = pair.ground_truth;
    let ov = overlap_ratio(&source, &target, &gt, cfg.mining.tau_ov)?;
    if ov <= cfg.min_overlap {
        return Err(Error::InvalidConfig(format!(
            "ground-truth overlap {ov:.3} not above {}",
            cfg.min_overlap
        )));
    }
    let mut rng = item_rng(seed, 0);
    let synthetic;
    let cs = match provided {
        Some(cs) => cs,
        None => {
            synthetic = synthetic_correspondences(&source, &target, &gt, &cfg.corruptor, &mut rng)?;
            &synthetic
        }
    };
    let hyps = generate_hypotheses(
        cs,
        &HypGenConfig {
            seed: derive_seed(seed, 1),
            ..cfg.hypgen
        },
    )?;

    let record = |n: usize, t: RigidTransform, category: Category, overlap: f64| -> Result<DatasetRecord> {
        let re = rotation_error(&t.rotation, &gt.rotation);
        let te = translation_error(&t.translation, &gt.translation);
        let label = if is_success(&t, &gt, &cfg.mining.threshold) {
            Label::Correct
        } else {
            Label::Wrong
        };
        Ok(DatasetRecord {
            id: format!("{}-{n:02}", pair.pair_id),
            pair_id: pair.pair_id.clone(),
            merged: merge_clouds(&apply_transform(&t, &source)?, &target)?,
            label,
            category,
            re,
            te,
            overlap,
            transform: t,
            ground_truth: gt,
        })
    };

    let mut out = vec![record(0, gt, Category::Correct, ov)?];
    let src_pair = PairRecord {
        source: source.clone(),
        target: target.clone(),
        ground_truth: gt,
        pair_id: pair.pair_id.clone(),
    };
    match mine_wrong_transforms(&src_pair, &hyps, &cfg.mining) {
        Ok(mined) => {
            for (n, m) in mined.into_iter().enumerate() {
                out.push(record(n + 1, m.transform, m.category, m.overlap)?);
            }
        }
        Err(Error::NoWrongCandidates) => {
            log::info!("pair {}: no wrong candidates", pair.pair_id);
        }
        Err(e) => return Err(e),
    }
    Ok(out)
}

/// Builds records for every pair, in pair order. Pair `i` is processed with
/// seed `derive_seed(seed, i)`; pairs that fail are logged and skipped.
pub fn build_dataset(
    pairs: &[PairRecord],
    correspondences: CorrespondenceSource<'_>,
    cfg: &GenConfig,
    seed: u64,
) -> Result<Vec<DatasetRecord>> {
    if pairs.is_empty() {
        return Err(Error::EmptyResultSet);
    }
    if let CorrespondenceSource::Provided(sets) = correspondences {
        if sets.len() != pairs.len() {
            return Err(Error::LengthMismatch(pairs.len(), sets.len()));
        }
    }
    let per_pair: Vec<Result<Vec<DatasetRecord>>> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, pair)| {
            let provided = match correspondences {
                CorrespondenceSource::Synthetic => None,
                CorrespondenceSource::Provided(sets) => Some(&sets[i]),
            };
            pair_records(pair, provided, cfg, derive_seed(seed, i as u64))
        })
        .collect();
    let mut records = Vec::new();
    for (pair, r) in pairs.iter().zip(per_pair) {
        match r {
            Ok(rs) => records.extend(rs),
            Err(e) => log::warn!("skipping pair {}: {e}", pair.pair_id),
        }
    }
    Ok(records)
}

/// Pair-disjoint split: `round(fraction · pairs)` pairs (at least one on
/// each side) go to training, chosen by a seeded shuffle of the sorted pair
/// ids. Records keep their relative order.
pub fn split_dataset(
    records: &[DatasetRecord],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<DatasetRecord>, Vec<DatasetRecord>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidConfig(format!("split fraction {fraction} outside (0, 1)")));
    }
    let mut ids: Vec<&str> = records.iter().map(|r| r.pair_id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() < 2 {
        return Err(Error::TooFewPairs(ids.len()));
    }
    let n_train = ((fraction * ids.len() as f64).round() as usize).clamp(1, ids.len() - 1);
    ids.shuffle(&mut item_rng(seed, 0));
    let train_ids: std::collections::HashSet<&str> = ids[..n_train].iter().copied().collect();
    let (train, val): (Vec<_>, Vec<_>) = records
        .iter()
        .cloned()
        .partition(|r| train_ids.contains(r.pair_id.as_str()));
    Ok((train, val))
}
