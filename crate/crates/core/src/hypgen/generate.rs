use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{first_order_compat, second_order_compat, CorrespondenceSet, CountMatrix, Hypothesis};
use crate::error::{Error, Result};
use crate::geom::{estimate_rigid, RigidTransform, Vec3};
use crate::metrics::{inlier_count, rotation_error};
use crate::tolerances::{
    ATTEMPTS_PER_HYPOTHESIS, DUPLICATE_RE_DEG, DUPLICATE_TE_M, HYPOTHESIS_COUNT, TAU_IN, TAU_SC,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HypGenConfig {
    /// Hypotheses returned at most.
    pub k: usize,
    pub tau_sc: f64,
    pub tau_in: f64,
    pub seed: u64,
    /// Triplet draws per requested hypothesis.
    pub attempts_per_hypothesis: usize,
    pub duplicate_re_deg: f64,
    pub duplicate_te: f64,
}

impl Default for HypGenConfig {
    fn default() -> Self {
        HypGenConfig {
            k: HYPOTHESIS_COUNT,
            tau_sc: TAU_SC,
            tau_in: TAU_IN,
            seed: 0,
            attempts_per_hypothesis: ATTEMPTS_PER_HYPOTHESIS,
            duplicate_re_deg: DUPLICATE_RE_DEG,
            duplicate_te: DUPLICATE_TE_M,
        }
    }
}

/// Index drawn with probability proportional to `weights`; `None` when all
/// weights are zero.
fn pick_weighted(rng: &mut ChaCha8Rng, weights: impl Iterator<Item = u64> + Clone) -> Option<usize> {
    let total: u64 = weights.clone().sum();
    if total == 0 {
        return None;
    }
    let mut r = rng.random_range(0..total);
    for (i, w) in weights.enumerate() {
        if r < w {
            return Some(i);
        }
        r -= w;
    }
    unreachable!("weighted draw beyond total")
}

/// Compatibility-guided triplet sampler.
struct TripletSampler<'a> {
    sc: &'a CountMatrix,
    node_weight: Vec<u64>,
}

impl<'a> TripletSampler<'a> {
    fn new(sc: &'a CountMatrix) -> Self {
        let node_weight = (0..sc.size())
            .map(|i| sc.row(i).iter().map(|&v| v as u64).sum())
            .collect();
        TripletSampler { sc, node_weight }
    }

    /// `i ∝ Σ_j SC(i, j)`, then `j ∝ SC(i, j)`, then `l ∝ SC(i, l)·SC(j, l)`,
    /// so every triple drawn is mutually first-order compatible. Falls back to
    /// a uniform triple when the compatibility graph has no triangle.
    fn draw(&self, rng: &mut ChaCha8Rng) -> [usize; 3] {
        let n = self.sc.size();
        let guided = pick_weighted(rng, self.node_weight.iter().copied()).and_then(|i| {
            let j = pick_weighted(rng, self.sc.row(i).iter().map(|&v| v as u64))?;
            let (ri, rj) = (self.sc.row(i), self.sc.row(j));
            let l = pick_weighted(
                rng,
                ri.iter().zip(rj).map(|(&a, &b)| a as u64 * b as u64),
            )?;
            Some([i, j, l])
        });
        let mut t = guided.unwrap_or_else(|| {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let (lo, hi) = (i.min(j), i.max(j));
            let mut l = rng.random_range(0..n - 2);
            if l >= lo {
                l += 1;
            }
            if l >= hi {
                l += 1;
            }
            [i, j, l]
        });
        t.sort_unstable();
        t
    }
}

fn is_duplicate(a: &RigidTransform, b: &RigidTransform, re_deg: f64, te: f64) -> bool {
    (a.translation - b.translation).norm() < te && rotation_error(&a.rotation, &b.rotation) < re_deg
}

/// Ranked rigid-transform hypotheses from triplets sampled by second-order
/// spatial compatibility.
///
/// `attempts_per_hypothesis · k` distinct triplets are drawn (fewer when the
/// set has fewer triplets). Each non-degenerate triplet is fitted, the pool is
/// ranked by inlier count, near-duplicates of a better-ranked hypothesis are
/// suppressed, and the best `k` survivors are returned.
pub fn generate_hypotheses(cs: &CorrespondenceSet, cfg: &HypGenConfig) -> Result<Vec<Hypothesis>> {
    let n = cs.len();
    if n < 3 {
        return Err(Error::InsufficientCorrespondences { needed: 3, got: n });
    }
    if cfg.k == 0 {
        return Err(Error::InvalidConfig("hypothesis count k must be ≥ 1".into()));
    }
    let compat = first_order_compat(cs, cfg.tau_sc);
    let sc = second_order_compat(&compat);
    let sampler = TripletSampler::new(&sc);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let n128 = n as u128;
    let distinct = n128 * (n128 - 1) * (n128 - 2) / 6;
    let budget = (cfg.attempts_per_hypothesis.max(1) * cfg.k) as u128;
    let draws = budget.min(distinct) as usize;
    // Repeated triples are redrawn, up to as many repeats as draws, so
    // sets with few compatible triples still terminate.
    let max_tries = draws.saturating_mul(2).max(64);

    let mut seen: HashSet<[usize; 3]> = HashSet::with_capacity(draws);
    let mut pool: Vec<Hypothesis> = Vec::new();
    let mut tries = 0;
    while seen.len() < draws && tries < max_tries {
        tries += 1;
        let t = sampler.draw(&mut rng);
        if !seen.insert(t) {
            continue;
        }
        let src: Vec<Vec3> = t.iter().map(|&i| cs.items[i].src).collect();
        let tgt: Vec<Vec3> = t.iter().map(|&i| cs.items[i].tgt).collect();
        match estimate_rigid(&src, &tgt) {
            Ok(transform) => pool.push(Hypothesis {
                transform,
                inlier_count: inlier_count(&transform, cs, cfg.tau_in),
                rank: pool.len(),
            }),
            Err(Error::DegenerateConfiguration) | Err(Error::NonFinite(_)) | Err(Error::InvalidRotation(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if pool.is_empty() {
        return Err(Error::AllSubsetsDegenerate);
    }

    pool.sort_by(|a, b| b.inlier_count.cmp(&a.inlier_count));
    let mut kept: Vec<Hypothesis> = Vec::with_capacity(cfg.k);
    for h in pool {
        if kept.len() == cfg.k {
            break;
        }
        let dup = kept.iter().any(|k| {
            is_duplicate(&k.transform, &h.transform, cfg.duplicate_re_deg, cfg.duplicate_te)
        });
        if !dup {
            kept.push(h);
        }
    }
    for (rank, h) in kept.iter_mut().enumerate() {
        h.rank = rank;
    }
    Ok(kept)
}

/// Recounts inliers, stable-sorts by descending count and rewrites ranks.
pub fn rank_by_inlier_count(hyps: &[Hypothesis], cs: &CorrespondenceSet, tau_in: f64) -> Vec<Hypothesis> {
    let mut out: Vec<Hypothesis> = hyps
        .iter()
        .map(|h| Hypothesis {
            inlier_count: inlier_count(&h.transform, cs, tau_in),
            ..*h
        })
        .collect();
    out.sort_by(|a, b| b.inlier_count.cmp(&a.inlier_count));
    for (rank, h) in out.iter_mut().enumerate() {
        h.rank = rank;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypgen::Correspondence;
    use crate::metrics::translation_error;

    fn rv(rng: &mut ChaCha8Rng, s: f64) -> Vec3 {
        Vec3::new(rng.random_range(-s..s), rng.random_range(-s..s), rng.random_range(-s..s))
    }

    fn scenario(seed: u64, inliers: usize, outliers: usize) -> (CorrespondenceSet, RigidTransform) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let axis = rv(&mut rng, 1.0);
        let gt = RigidTransform::from_axis_angle(&axis, rng.random_range(0.0..3.0), rv(&mut rng, 2.0));
        let mut items = Vec::new();
        for _ in 0..inliers {
            let s = rv(&mut rng, 2.0);
            items.push(Correspondence::new(s, gt.apply(&s) + rv(&mut rng, 0.01)));
        }
        for _ in 0..outliers {
            items.push(Correspondence::new(rv(&mut rng, 2.0), rv(&mut rng, 3.0)));
        }
        (CorrespondenceSet::new(items, "synthetic"), gt)
    }

    #[test]
    fn perfect_inliers_give_the_generating_transform() {
        let (cs, gt) = scenario(1, 50, 0);
        let cs = CorrespondenceSet::new(
            cs.items.iter().map(|c| Correspondence::new(c.src, gt.apply(&c.src))).collect(),
            "synthetic",
        );
        let cfg = HypGenConfig { k: 10, ..Default::default() };
        let hyps = generate_hypotheses(&cs, &cfg).unwrap();
        assert!(!hyps.is_empty() && hyps.len() <= 10);
        for h in &hyps {
            assert!(rotation_error(&h.transform.rotation, &gt.rotation) <= 1e-3);
        }
    }

    #[test]
    fn three_correspondences_single_fit() {
        let (cs, gt) = scenario(2, 3, 0);
        let exact = CorrespondenceSet::new(
            cs.items.iter().map(|c| Correspondence::new(c.src, gt.apply(&c.src))).collect(),
            "synthetic",
        );
        let hyps = generate_hypotheses(&exact, &HypGenConfig { k: 1, ..Default::default() }).unwrap();
        assert_eq!(hyps.len(), 1);
        assert!(rotation_error(&hyps[0].transform.rotation, &gt.rotation) < 1e-6);
        assert!(translation_error(&hyps[0].transform.translation, &gt.translation) < 1e-9);
    }

    #[test]
    fn deterministic_given_seed() {
        let (cs, _) = scenario(3, 20, 80);
        let cfg = HypGenConfig { k: 30, seed: 99, ..Default::default() };
        let a = generate_hypotheses(&cs, &cfg).unwrap();
        let b = generate_hypotheses(&cs, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ranks_are_consistent() {
        let (cs, _) = scenario(4, 15, 60);
        let hyps = generate_hypotheses(&cs, &HypGenConfig { k: 40, ..Default::default() }).unwrap();
        for (i, h) in hyps.iter().enumerate() {
            assert_eq!(h.rank, i);
        }
        assert!(hyps.windows(2).all(|w| w[0].inlier_count >= w[1].inlier_count));
        assert_eq!(rank_by_inlier_count(&hyps, &cs, TAU_IN), hyps);
    }

    #[test]
    fn too_few_and_degenerate() {
        let cs = CorrespondenceSet::new(vec![Correspondence::new(Vec3::zeros(), Vec3::zeros()); 2], "x");
        assert!(matches!(
            generate_hypotheses(&cs, &HypGenConfig::default()),
            Err(Error::InsufficientCorrespondences { .. })
        ));
        let line: Vec<_> = (0..5)
            .map(|i| Correspondence::new(Vec3::new(i as f64, 0.0, 0.0), Vec3::new(i as f64, 0.0, 0.0)))
            .collect();
        assert!(matches!(
            generate_hypotheses(&CorrespondenceSet::new(line, "x"), &HypGenConfig::default()),
            Err(Error::AllSubsetsDegenerate)
        ));
    }

    #[test]
    fn rank_two_hypotheses() {
        let (cs, gt) = scenario(5, 9, 5);
        let off = gt.compose(&RigidTransform::from_translation(Vec3::new(5.0, 0.0, 0.0)));
        let hyps = Hypothesis::from_transforms(&[off, gt]);
        let ranked = rank_by_inlier_count(&hyps, &cs, 0.1);
        assert_eq!(ranked[0].transform, gt);
        assert_eq!(ranked[0].inlier_count, 9);
        assert_eq!((ranked[0].rank, ranked[1].rank), (0, 1));
        let one = rank_by_inlier_count(&hyps[..1], &cs, 0.1);
        assert_eq!(one[0].rank, 0);
    }

    #[test]
    fn rank_zero_is_correct_at_moderate_inlier_ratio() {
        let mut ok = 0;
        for seed in 0..100 {
            let (cs, gt) = scenario(1000 + seed, 12, 24);
            let cfg = HypGenConfig { k: 20, seed, ..Default::default() };
            let hyps = generate_hypotheses(&cs, &cfg).unwrap();
            let t = &hyps[0].transform;
            if rotation_error(&t.rotation, &gt.rotation) < 15.0
                && translation_error(&t.translation, &gt.translation) < 0.3
            {
                ok += 1;
            }
        }
        assert!(ok >= 95, "{ok}/100");
    }
}
