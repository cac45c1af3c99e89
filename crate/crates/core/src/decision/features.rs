//! Hand-crafted geometric features of a tagged merged cloud.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Tag, TaggedMergedCloud};
use crate::error::{Error, Result};
use crate::geom::{NeighborIndex, Vec3};
use crate::metrics::{median, FreeSpaceGrid};
use crate::tolerances::{SVC_GRID, TAG_MIX_K, TAU_C, TAU_OV};

pub const FEATURE_NAMES: [&str; 6] = [
    "overlap_source_to_target",
    "overlap_target_to_source",
    "truncated_chamfer_norm",
    "tag_mixing",
    "median_cross_distance",
    "free_space_violation",
];

pub const ARITY: usize = FEATURE_NAMES.len();

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub tau_ov: f64,
    pub tau_c: f64,
    pub tag_mix_k: usize,
    pub svc_grid: f64,
    /// Seed of the random re-tagging used when tags are ablated.
    pub retag_seed: u64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            tau_ov: TAU_OV,
            tau_c: TAU_C,
            tag_mix_k: TAG_MIX_K,
            svc_grid: SVC_GRID,
            retag_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub values: [f64; ARITY],
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.values[i])
    }
}

/// Target-side structures shared by every hypothesis of a pair.
pub struct TargetContext {
    index: NeighborIndex,
    free: Option<FreeSpaceGrid>,
}

impl TargetContext {
    pub fn new(points: &[Vec3], viewpoint: Option<Vec3>, cfg: &FeatureConfig) -> Result<Self> {
        let index = NeighborIndex::build(points)?;
        let free = match viewpoint {
            Some(vp) => Some(FreeSpaceGrid::build(points, &vp, cfg.svc_grid)?),
            None => None,
        };
        Ok(TargetContext { index, free })
    }

    /// Features of `source` merged with this target.
    ///
    /// Features, in order: overlap ratio source→target and target→source at
    /// `tau_ov`; truncated chamfer distance divided by `tau_c`; share of points
    /// whose `k` nearest merged neighbors carry both tags; median nearest
    /// cross-tag distance clamped at `tau_c`; share of source points in the
    /// target's observed free space (0 without a target viewpoint).
    pub fn features(&self, source: &[Vec3], cfg: &FeatureConfig) -> Result<FeatureVector> {
        let src_index = NeighborIndex::build(source)?;
        let target = self.index.points();
        let (ns, nt) = (source.len(), target.len());

        let d_st: Vec<f64> = source.iter().map(|x| self.index.nearest(x).1).collect();
        let d_ts: Vec<f64> = target.iter().map(|x| src_index.nearest(x).1).collect();

        let within = |d: &[f64]| d.iter().filter(|&&v| v <= cfg.tau_ov).count() as f64 / d.len() as f64;
        let overlap_st = within(&d_st);
        let overlap_ts = within(&d_ts);

        let clamped_mean = |d: &[f64]| {
            let mut c: Vec<f64> = d.iter().map(|v| v.min(cfg.tau_c)).collect();
            crate::metrics::order_free_sum(&mut c) / c.len() as f64
        };
        let chamfer = 0.5 * (clamped_mean(&d_st) + clamped_mean(&d_ts)) / cfg.tau_c;

        // Merged index: source i ↦ i, target j ↦ ns + j.
        let k = cfg.tag_mix_k;
        let mixed_at = |q: &Vec3, own: Option<(Tag, usize)>| -> bool {
            let exclude_src = matches!(own, Some((Tag::Source, _))).then(|| own.unwrap().1);
            let exclude_tgt = matches!(own, Some((Tag::Target, _))).then(|| own.unwrap().1);
            let from_src = src_index.k_nearest(q, k, exclude_src);
            let from_tgt = self.index.k_nearest(q, k, exclude_tgt);
            let (mut i, mut j) = (0, 0);
            let (mut has_src, mut has_tgt) = (false, false);
            for _ in 0..k {
                let take_src = match (from_src.get(i), from_tgt.get(j)) {
                    (Some(a), Some(b)) => (a.1, a.0) <= (b.1, ns + b.0),
                    (Some(_), None) => true,
                    (None, Some(_)) => false,
                    (None, None) => break,
                };
                if take_src {
                    has_src = true;
                    i += 1;
                } else {
                    has_tgt = true;
                    j += 1;
                }
                if has_src && has_tgt {
                    return true;
                }
            }
            false
        };
        let mixed = source
            .iter()
            .enumerate()
            .filter(|(i, x)| mixed_at(x, Some((Tag::Source, *i))))
            .count()
            + target
                .iter()
                .enumerate()
                .filter(|(j, x)| mixed_at(x, Some((Tag::Target, *j))))
                .count();
        let tag_mixing = mixed as f64 / (ns + nt) as f64;

        let all: Vec<f64> = d_st.iter().chain(&d_ts).copied().collect();
        let median_cross = median(&all).unwrap_or(cfg.tau_c).min(cfg.tau_c);

        let violation = self
            .free
            .as_ref()
            .map_or(0.0, |f| f.violation_ratio(source));

        let values = [overlap_st, overlap_ts, chamfer, tag_mixing, median_cross, violation];
        if values.iter().all(|v| v.is_finite()) {
            Ok(FeatureVector { values })
        } else {
            Err(Error::NonFinite("feature"))
        }
    }
}

/// Features of a merged cloud.
///
/// With `with_tags = false` the original tags are discarded and every point
/// is re-tagged by a fair coin drawn from `cfg.retag_seed`; the feature set
/// and arity stay the same.
pub fn extract_features(m: &TaggedMergedCloud, cfg: &FeatureConfig, with_tags: bool) -> Result<FeatureVector> {
    m.validate()?;
    let (source, target) = if with_tags {
        (m.positions(Tag::Source), m.positions(Tag::Target))
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.retag_seed);
        let mut s = Vec::new();
        let mut t = Vec::new();
        for p in &m.points {
            if rng.random_bool(0.5) {
                s.push(p.pos);
            } else {
                t.push(p.pos);
            }
        }
        (s, t)
    };
    if source.is_empty() || target.is_empty() {
        return Err(Error::DegenerateCloud);
    }
    TargetContext::new(&target, m.target_viewpoint, cfg)?.features(&source, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::merge_clouds;
    use crate::geom::{apply_transform, dist2, PointCloud, RigidTransform};
    use crate::metrics::{overlap_ratio, truncated_chamfer};
    use rand::seq::SliceRandom;

    fn blob(rng: &mut ChaCha8Rng, n: usize, offset: Vec3) -> PointCloud {
        PointCloud::new(
            (0..n)
                .map(|_| offset + Vec3::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..0.3)))
                .collect(),
        )
    }

    #[test]
    fn coincident_clouds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = blob(&mut rng, 120, Vec3::zeros());
        let m = merge_clouds(&p, &p).unwrap();
        let f = extract_features(&m, &FeatureConfig::default(), true).unwrap();
        assert_eq!(f.values[0], 1.0);
        assert_eq!(f.values[1], 1.0);
        assert_eq!(f.values[2], 0.0);
    }

    #[test]
    fn separated_clouds_saturate() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = blob(&mut rng, 80, Vec3::new(50.0, 0.0, 0.0));
        let q = blob(&mut rng, 90, Vec3::zeros());
        let f = extract_features(&merge_clouds(&p, &q).unwrap(), &FeatureConfig::default(), true).unwrap();
        assert_eq!(f.values[0], 0.0);
        assert_eq!(f.values[1], 0.0);
        assert!((f.values[2] - 1.0).abs() < 1e-12);
        assert_eq!(f.values[3], 0.0);
        assert_eq!(f.values[4], FeatureConfig::default().tau_c);
        assert_eq!(f.values[5], 0.0);
    }

    #[test]
    fn features_match_metric_oracles() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = FeatureConfig::default();
        let p = blob(&mut rng, 150, Vec3::zeros());
        let q = blob(&mut rng, 130, Vec3::new(0.4, 0.1, 0.0));
        let m = merge_clouds(&p, &q).unwrap();
        let f = extract_features(&m, &cfg, true).unwrap();
        let id = RigidTransform::identity();
        assert_eq!(f.values[0], overlap_ratio(&p, &q, &id, cfg.tau_ov).unwrap());
        assert_eq!(f.values[1], overlap_ratio(&q, &p, &id, cfg.tau_ov).unwrap());
        assert!((f.values[2] - truncated_chamfer(&p, &q, cfg.tau_c).unwrap() / cfg.tau_c).abs() < 1e-12);

        // Tag mixing by brute force over the merged cloud.
        let pts: Vec<(Vec3, Tag)> = m.points.iter().map(|t| (t.pos, t.tag)).collect();
        let mut mixed = 0;
        for (i, (x, _)) in pts.iter().enumerate() {
            let mut others: Vec<(f64, usize)> = pts
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(j, (y, _))| (dist2(x, y).sqrt(), j))
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let tags: Vec<Tag> = others[..cfg.tag_mix_k].iter().map(|(_, j)| pts[*j].1).collect();
            if tags.contains(&Tag::Source) && tags.contains(&Tag::Target) {
                mixed += 1;
            }
        }
        assert_eq!(f.values[3], mixed as f64 / pts.len() as f64);

        let mut cross: Vec<f64> = pts
            .iter()
            .map(|(x, t)| {
                pts.iter()
                    .filter(|(_, u)| u != t)
                    .map(|(y, _)| dist2(x, y).sqrt())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        cross.sort_by(f64::total_cmp);
        let n = cross.len();
        let med = if n % 2 == 1 { cross[n / 2] } else { 0.5 * (cross[n / 2 - 1] + cross[n / 2]) };
        assert_eq!(f.values[4], med.min(cfg.tau_c));
    }

    #[test]
    fn permutation_invariant_with_tags() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = blob(&mut rng, 100, Vec3::zeros());
        let q = blob(&mut rng, 100, Vec3::new(0.3, 0.0, 0.0));
        let mut m = merge_clouds(&p, &q).unwrap();
        m.target_viewpoint = Some(Vec3::new(0.5, 0.5, 3.0));
        let cfg = FeatureConfig::default();
        let a = extract_features(&m, &cfg, true).unwrap();
        m.points.shuffle(&mut rng);
        let b = extract_features(&m, &cfg, true).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ablation_is_seeded_and_keeps_arity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = blob(&mut rng, 60, Vec3::zeros());
        let q = apply_transform(&RigidTransform::from_translation(Vec3::new(2.0, 0.0, 0.0)), &p).unwrap();
        let m = merge_clouds(&p, &q).unwrap();
        let cfg = FeatureConfig::default();
        let a = extract_features(&m, &cfg, false).unwrap();
        assert_eq!(a, extract_features(&m, &cfg, false).unwrap());
        assert_eq!(a.values.len(), FEATURE_NAMES.len());
        // With true tags the blobs are far apart; random halves overlap.
        assert_eq!(extract_features(&m, &cfg, true).unwrap().values[0], 0.0);
        assert!(a.values[0] > 0.0);
    }

    #[test]
    fn single_tag_is_degenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = blob(&mut rng, 10, Vec3::zeros());
        let mut m = merge_clouds(&p, &p).unwrap();
        for t in &mut m.points {
            t.tag = Tag::Source;
        }
        assert!(matches!(
            extract_features(&m, &FeatureConfig::default(), true),
            Err(Error::DegenerateCloud)
        ));
    }
}
