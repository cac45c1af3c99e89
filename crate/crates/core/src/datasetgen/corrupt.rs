use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{dist2, NeighborIndex, PointCloud, RigidTransform, Vec3};
use crate::hypgen::{Correspondence, CorrespondenceSet};
use crate::tolerances::{TAU_IN, TAU_OV};

/// Synthetic stand-in for descriptor matching.
///
/// A set of `count` correspondences holds `round(inlier_ratio · count)`
/// true matches on the overlap region (residual ≤ `tau_in / 2` under ground
/// truth), `round(decoy_fraction · count)` decoys that agree with one fixed
/// wrong transform (the way repetitive structure fools a descriptor), and
/// uniformly random pairings for the rest. Decoys and random pairings always
/// have a residual above `tau_in` under ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorruptorConfig {
    pub count: usize,
    pub inlier_ratio: f64,
    pub decoy_fraction: f64,
    /// Standard deviation of the displacement applied to matched targets.
    pub noise: f64,
    pub tau_in: f64,
    pub tau_ov: f64,
}

impl Default for CorruptorConfig {
    fn default() -> Self {
        CorruptorConfig {
            count: 500,
            inlier_ratio: 0.05,
            decoy_fraction: 0.04,
            noise: 0.01,
            tau_in: TAU_IN,
            tau_ov: TAU_OV,
        }
    }
}

impl CorruptorConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.count >= 3
            && self.inlier_ratio > 0.0
            && self.inlier_ratio <= 1.0
            && (0.0..1.0).contains(&self.decoy_fraction)
            && self.noise >= 0.0
            && self.tau_in > 0.0
            && self.tau_ov > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(
                "corruptor needs count ≥ 3, inlier ratio in (0, 1], decoy fraction in [0, 1)".into(),
            ))
        }
    }

    /// (inliers, decoys, random pairings).
    pub fn split_counts(&self) -> (usize, usize, usize) {
        let n_in = ((self.inlier_ratio * self.count as f64).round() as usize).clamp(3.min(self.count), self.count);
        let n_dec = ((self.decoy_fraction * self.count as f64).round() as usize).min(self.count - n_in);
        (n_in, n_dec, self.count - n_in - n_dec)
    }
}

/// Random displacement of norm at most `cap`.
fn bounded_noise(rng: &mut ChaCha8Rng, sigma: f64, cap: f64) -> Vec3 {
    if sigma == 0.0 {
        return Vec3::zeros();
    }
    let n = Normal::new(0.0, sigma).expect("finite sigma");
    loop {
        let v = Vec3::new(n.sample(rng), n.sample(rng), n.sample(rng));
        if v.norm() <= cap {
            return v;
        }
    }
}

/// A transform at least 25° and 0.2 m away from `gt`, pivoting about `pivot`
/// in the source frame.
pub fn decoy_transform(rng: &mut ChaCha8Rng, gt: &RigidTransform, pivot: &Vec3) -> RigidTransform {
    let axis: [f64; 3] = UnitSphere.sample(rng);
    let angle = rng.random_range(25.0f64..90.0).to_radians();
    let dir: [f64; 3] = UnitSphere.sample(rng);
    let shift = Vec3::from(dir) * rng.random_range(0.2..0.6);
    let spin = RigidTransform::from_axis_angle(&Vec3::from(axis), angle, Vec3::zeros());
    // Rotate about the pivot, then shift.
    let local = RigidTransform {
        rotation: spin.rotation,
        translation: pivot - spin.rotation * pivot + shift,
    };
    gt.compose(&local)
}

/// Correspondences between `source` (source frame) and `target` for the
/// ground truth `gt`, in shuffled order.
pub fn synthetic_correspondences(
    source: &PointCloud,
    target: &PointCloud,
    gt: &RigidTransform,
    cfg: &CorruptorConfig,
    rng: &mut ChaCha8Rng,
) -> Result<CorrespondenceSet> {
    cfg.validate()?;
    source.validate()?;
    target.validate()?;
    let (n_in, n_dec, n_out) = cfg.split_counts();
    let tau2 = cfg.tau_in * cfg.tau_in;
    let cap = 0.5 * cfg.tau_in;

    let index = NeighborIndex::build(&target.points)?;
    let mut overlap: Vec<usize> = (0..source.len())
        .filter(|&i| index.nearest(&gt.apply(&source.points[i])).1 <= cfg.tau_ov)
        .collect();
    if overlap.is_empty() {
        overlap = (0..source.len()).collect();
    }

    let mut items = Vec::with_capacity(cfg.count);
    overlap.shuffle(rng);
    for k in 0..n_in {
        let src = source.points[overlap[k % overlap.len()]];
        let tgt = gt.apply(&src) + bounded_noise(rng, cfg.noise, cap);
        items.push(Correspondence::new(src, tgt));
    }

    let budget = 1000 * cfg.count.max(1);
    let mut tries = 0;
    let mut push_outlier = |items: &mut Vec<Correspondence>, make: &mut dyn FnMut(&mut ChaCha8Rng) -> Correspondence, rng: &mut ChaCha8Rng| -> Result<()> {
        loop {
            tries += 1;
            if tries > budget {
                return Err(Error::InvalidConfig("cannot place outliers beyond the inlier threshold".into()));
            }
            let c = make(rng);
            if dist2(&gt.apply(&c.src), &c.tgt) > tau2 {
                items.push(c);
                return Ok(());
            }
        }
    };

    if n_dec > 0 {
        let pivot = overlap
            .iter()
            .map(|&i| source.points[i])
            .sum::<Vec3>()
            / overlap.len() as f64;
        let wrong = decoy_transform(rng, gt, &pivot);
        let mut make = |rng: &mut ChaCha8Rng| {
            let src = source.points[rng.random_range(0..source.len())];
            Correspondence::new(src, wrong.apply(&src) + bounded_noise(rng, cfg.noise, cap))
        };
        for _ in 0..n_dec {
            push_outlier(&mut items, &mut make, rng)?;
        }
    }
    let mut make = |rng: &mut ChaCha8Rng| {
        Correspondence::new(
            source.points[rng.random_range(0..source.len())],
            target.points[rng.random_range(0..target.len())],
        )
    };
    for _ in 0..n_out {
        push_outlier(&mut items, &mut make, rng)?;
    }
    items.shuffle(rng);
    Ok(CorrespondenceSet::new(items, "synthetic"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{inlier_count, rotation_error};
    use rand::SeedableRng;

    fn plane(n: usize, rng: &mut ChaCha8Rng) -> PointCloud {
        PointCloud::new(
            (0..n)
                .map(|_| Vec3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(0.0..1.0)))
                .collect(),
        )
    }

    #[test]
    fn measured_inlier_ratio_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let src = plane(800, &mut rng);
        let gt = RigidTransform::from_axis_angle(&Vec3::new(1.0, 2.0, 0.5), 0.8, Vec3::new(0.3, -1.0, 0.2));
        let tgt = crate::geom::apply_transform(&gt, &src).unwrap();
        for ratio in [0.02, 0.05, 0.2, 1.0] {
            let cfg = CorruptorConfig { inlier_ratio: ratio, ..Default::default() };
            let cs = synthetic_correspondences(&src, &tgt, &gt, &cfg, &mut rng).unwrap();
            assert_eq!(cs.len(), cfg.count);
            let measured = inlier_count(&gt, &cs, cfg.tau_in) as f64 / cs.len() as f64;
            assert!((measured - ratio).abs() <= 0.02, "{ratio} vs {measured}");
        }
    }

    #[test]
    fn decoys_outvote_sparse_inliers() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let src = plane(500, &mut rng);
        let gt = RigidTransform::identity();
        let cfg = CorruptorConfig { decoy_fraction: 0.1, inlier_ratio: 0.05, ..Default::default() };
        let cs = synthetic_correspondences(&src, &src, &gt, &cfg, &mut rng).unwrap();
        let hyps = crate::hypgen::generate_hypotheses(&cs, &Default::default()).unwrap();
        let top = &hyps[0];
        assert!(top.inlier_count >= 45);
        assert!(rotation_error(&top.transform.rotation, &gt.rotation) > 15.0);
    }

    #[test]
    fn exact_inliers_recover_gt() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let src = plane(300, &mut rng);
        let gt = RigidTransform::from_axis_angle(&Vec3::z(), 1.0, Vec3::new(1.0, 0.0, 0.0));
        let tgt = crate::geom::apply_transform(&gt, &src).unwrap();
        let cfg = CorruptorConfig { inlier_ratio: 1.0, noise: 0.0, decoy_fraction: 0.0, count: 20, ..Default::default() };
        let cs = synthetic_correspondences(&src, &tgt, &gt, &cfg, &mut rng).unwrap();
        let fit = crate::geom::estimate_rigid(
            &cs.items[..3].iter().map(|c| c.src).collect::<Vec<_>>(),
            &cs.items[..3].iter().map(|c| c.tgt).collect::<Vec<_>>(),
        )
        .unwrap();
        assert!(rotation_error(&fit.rotation, &gt.rotation) < 1e-6);
    }
}
