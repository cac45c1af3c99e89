//! Synthetic indoor scenes: a room with boxes on the floor, seen as two
//! partial scans from nearby viewpoints.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::datasetgen::{synthetic_correspondences, CorruptorConfig, PairRecord};
use crate::error::{Error, Result};
use crate::geom::{apply_transform, PointCloud, RigidTransform, Vec3};
use crate::hypgen::CorrespondenceSet;
use crate::metrics::overlap_ratio;
use crate::seeding::item_rng;
use crate::tolerances::{TAU_IN, TAU_OV};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSceneConfig {
    pub points_per_view: usize,
    /// Target overlap ratio of the source view onto the target view.
    pub overlap: f64,
    /// Gaussian noise added to every view point, meters.
    pub noise: f64,
    pub inlier_ratio: f64,
    /// Correspondences per pair.
    pub correspondence_count: usize,
    /// Share of correspondences agreeing with one wrong transform.
    pub decoy_fraction: f64,
    /// Ground-truth rotation angle range, degrees.
    pub rotation_deg: [f64; 2],
    /// Ground-truth translation norm range, meters.
    pub translation_m: [f64; 2],
    pub tau_in: f64,
    pub tau_ov: f64,
    pub seed: u64,
}

impl Default for SyntheticSceneConfig {
    fn default() -> Self {
        SyntheticSceneConfig {
            points_per_view: 5000,
            overlap: 0.5,
            noise: 0.005,
            inlier_ratio: 0.05,
            correspondence_count: 500,
            decoy_fraction: CorruptorConfig::default().decoy_fraction,
            rotation_deg: [0.0, 180.0],
            translation_m: [0.0, 1.0],
            tau_in: TAU_IN,
            tau_ov: TAU_OV,
            seed: 0,
        }
    }
}

impl SyntheticSceneConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.points_per_view < 3 {
            return bad("points_per_view must be at least 3");
        }
        if !(self.overlap > 0.0 && self.overlap <= 1.0) {
            return bad("overlap must lie in (0, 1]");
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad("noise must be non-negative");
        }
        let ordered = |r: [f64; 2]| r[0] >= 0.0 && r[0] <= r[1] && r[1].is_finite();
        if !ordered(self.rotation_deg) || self.rotation_deg[1] > 180.0 || !ordered(self.translation_m) {
            return bad("transform ranges must be ordered, non-negative, rotation at most 180");
        }
        self.corruptor().validate()
    }

    pub fn corruptor(&self) -> CorruptorConfig {
        CorruptorConfig {
            count: self.correspondence_count,
            inlier_ratio: self.inlier_ratio,
            decoy_fraction: self.decoy_fraction,
            noise: self.noise,
            tau_in: self.tau_in,
            tau_ov: self.tau_ov,
        }
    }
}

const ROOM_HALF: f64 = 1.5;
const ROOM_HEIGHT: f64 = 2.2;
const EYE_HEIGHT: f64 = 1.3;
const WEDGE_DEG: f64 = 150.0;
const BOXES: usize = 6;

#[derive(Debug, Clone, Copy)]
struct Aabb {
    lo: Vec3,
    hi: Vec3,
}

impl Aabb {
    /// Entry parameter of the segment `a + t (b - a)`, `t ∈ [0, 1]`, if it
    /// hits the box.
    fn entry(&self, a: &Vec3, b: &Vec3) -> Option<f64> {
        let d = b - a;
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for k in 0..3 {
            if d[k].abs() < 1e-15 {
                if a[k] < self.lo[k] || a[k] > self.hi[k] {
                    return None;
                }
                continue;
            }
            let (mut u, mut v) = ((self.lo[k] - a[k]) / d[k], (self.hi[k] - a[k]) / d[k]);
            if u > v {
                std::mem::swap(&mut u, &mut v);
            }
            t0 = t0.max(u);
            t1 = t1.min(v);
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

/// Dense surface sample of one random room.
struct Room {
    points: Vec<Vec3>,
    /// Shared subsampling priority per point.
    keys: Vec<f64>,
    boxes: Vec<Aabb>,
}

impl Room {
    fn random(rng: &mut ChaCha8Rng, n: usize) -> Room {
        let mut boxes = Vec::new();
        while boxes.len() < BOXES {
            let c = Vec3::new(rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2), 0.0);
            if c.xy().norm() < 0.6 {
                continue;
            }
            let half = Vec3::new(rng.random_range(0.1..0.3), rng.random_range(0.1..0.3), 0.0);
            let h = rng.random_range(0.2..1.0);
            let lo = Vec3::new((c.x - half.x).max(-ROOM_HALF), (c.y - half.y).max(-ROOM_HALF), 0.0);
            let hi = Vec3::new((c.x + half.x).min(ROOM_HALF), (c.y + half.y).min(ROOM_HALF), h);
            boxes.push(Aabb { lo, hi });
        }

        // Planar patches as (origin, edge u, edge v).
        let s = 2.0 * ROOM_HALF;
        let mut patches: Vec<(Vec3, Vec3, Vec3)> = vec![
            (Vec3::new(-ROOM_HALF, -ROOM_HALF, 0.0), Vec3::new(s, 0.0, 0.0), Vec3::new(0.0, s, 0.0)),
            (Vec3::new(-ROOM_HALF, -ROOM_HALF, 0.0), Vec3::new(s, 0.0, 0.0), Vec3::new(0.0, 0.0, ROOM_HEIGHT)),
            (Vec3::new(-ROOM_HALF, ROOM_HALF, 0.0), Vec3::new(s, 0.0, 0.0), Vec3::new(0.0, 0.0, ROOM_HEIGHT)),
            (Vec3::new(-ROOM_HALF, -ROOM_HALF, 0.0), Vec3::new(0.0, s, 0.0), Vec3::new(0.0, 0.0, ROOM_HEIGHT)),
            (Vec3::new(ROOM_HALF, -ROOM_HALF, 0.0), Vec3::new(0.0, s, 0.0), Vec3::new(0.0, 0.0, ROOM_HEIGHT)),
        ];
        for b in &boxes {
            let e = b.hi - b.lo;
            let (ex, ey, ez) = (Vec3::new(e.x, 0.0, 0.0), Vec3::new(0.0, e.y, 0.0), Vec3::new(0.0, 0.0, e.z));
            patches.push((Vec3::new(b.lo.x, b.lo.y, b.hi.z), ex, ey));
            patches.push((b.lo, ex, ez));
            patches.push((b.lo + ey, ex, ez));
            patches.push((b.lo, ey, ez));
            patches.push((b.lo + ex, ey, ez));
        }
        let areas: Vec<f64> = patches.iter().map(|(_, u, v)| u.norm() * v.norm()).collect();
        let total: f64 = areas.iter().sum();
        let mut points = Vec::with_capacity(n);
        for ((o, u, v), a) in patches.iter().zip(&areas) {
            let count = (n as f64 * a / total).round() as usize;
            for _ in 0..count {
                let p = o + u * rng.random_range(0.0..1.0) + v * rng.random_range(0.0..1.0);
                // Floor points under a box are never visible; skip them.
                if p.z == 0.0 && boxes.iter().any(|b| p.x > b.lo.x && p.x < b.hi.x && p.y > b.lo.y && p.y < b.hi.y) {
                    continue;
                }
                points.push(p);
            }
        }
        let keys = (0..points.len()).map(|_| rng.random_range(0.0..1.0)).collect();
        Room { points, keys, boxes }
    }

    fn visible(&self, eye: &Vec3) -> Vec<bool> {
        self.points
            .iter()
            .map(|p| {
                !self
                    .boxes
                    .iter()
                    .any(|b| b.entry(eye, p).is_some_and(|t| t < 1.0 - 1e-9))
            })
            .collect()
    }
}

fn azimuth_deg(eye: &Vec3, p: &Vec3) -> f64 {
    (p.y - eye.y).atan2(p.x - eye.x).to_degrees().rem_euclid(360.0)
}

fn in_wedge(az: f64, start: f64) -> bool {
    (az - start).rem_euclid(360.0) < WEDGE_DEG
}

/// Indices of the `n` lowest-priority visible points inside the wedge.
fn view(room: &Room, visible: &[bool], az: &[f64], start: f64, n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..room.points.len())
        .filter(|&i| visible[i] && in_wedge(az[i], start))
        .collect();
    idx.sort_by(|&a, &b| room.keys[a].total_cmp(&room.keys[b]).then(a.cmp(&b)));
    idx.truncate(n);
    idx.sort_unstable();
    idx
}

fn noisy(points: &[Vec3], idx: &[usize], sigma: f64, rng: &mut ChaCha8Rng) -> Vec<Vec3> {
    let normal = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE)).expect("finite sigma");
    idx.iter()
        .map(|&i| {
            if sigma == 0.0 {
                points[i]
            } else {
                points[i] + Vec3::new(normal.sample(rng), normal.sample(rng), normal.sample(rng))
            }
        })
        .collect()
}

fn random_transform(rng: &mut ChaCha8Rng, cfg: &SyntheticSceneConfig) -> RigidTransform {
    let axis: [f64; 3] = UnitSphere.sample(rng);
    let angle = rng.random_range(cfg.rotation_deg[0]..=cfg.rotation_deg[1]).to_radians();
    let dir: [f64; 3] = UnitSphere.sample(rng);
    let mag = rng.random_range(cfg.translation_m[0]..=cfg.translation_m[1]);
    RigidTransform::from_axis_angle(&Vec3::from(axis), angle, Vec3::from(dir) * mag)
}

const SCENE_ATTEMPTS: u64 = 5;
const OVERLAP_TOLERANCE: f64 = 0.05;

/// One synthetic pair with ground truth and correspondences.
///
/// The source view (in its own frame, `source = gt⁻¹ · world`) and the target
/// view (world frame) are scans of the same room from two viewpoints 20 cm
/// apart, over azimuth wedges whose offset is bisected until the measured
/// overlap ratio is within 0.05 of the target. An overlap target of 1 gives
/// two identical clouds.
pub fn generate_scene_pair(cfg: &SyntheticSceneConfig) -> Result<(PairRecord, CorrespondenceSet)> {
    cfg.validate()?;
    let mut best = f64::NAN;
    for attempt in 0..SCENE_ATTEMPTS {
        let mut rng = item_rng(cfg.seed, attempt);
        let dense = cfg.points_per_view * (360.0 / WEDGE_DEG * 2.5) as usize;
        let room = Room::random(&mut rng, dense);
        let jitter = Vec3::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1), 0.0);
        let eye_a = Vec3::new(0.0, 0.0, EYE_HEIGHT) + jitter;
        let step: [f64; 2] = rand_distr::UnitCircle.sample(&mut rng);
        let eye_b = if cfg.overlap >= 1.0 { eye_a } else { eye_a + Vec3::new(step[0], step[1], 0.0) * 0.2 };
        let start_a = rng.random_range(0.0..360.0);
        let gt = random_transform(&mut rng, cfg);

        let vis_a = room.visible(&eye_a);
        let vis_b = room.visible(&eye_b);
        let az_a: Vec<f64> = room.points.iter().map(|p| azimuth_deg(&eye_a, p)).collect();
        let az_b: Vec<f64> = room.points.iter().map(|p| azimuth_deg(&eye_b, p)).collect();
        let idx_a = view(&room, &vis_a, &az_a, start_a, cfg.points_per_view);
        let pts_a = noisy(&room.points, &idx_a, cfg.noise, &mut rng);
        let noise_seed: u64 = rng.random();

        let target_for = |offset: f64| -> Result<(PointCloud, f64)> {
            let mut r = item_rng(noise_seed, 0);
            let idx_b = if cfg.overlap >= 1.0 {
                idx_a.clone()
            } else {
                view(&room, &vis_b, &az_b, start_a + offset, cfg.points_per_view)
            };
            let pts_b = if cfg.overlap >= 1.0 { pts_a.clone() } else { noisy(&room.points, &idx_b, cfg.noise, &mut r) };
            if pts_b.len() < 3 {
                return Err(Error::DegenerateCloud);
            }
            let q = PointCloud::with_viewpoint(pts_b, eye_b);
            let world_a = PointCloud::new(pts_a.clone());
            let ov = overlap_ratio(&world_a, &q, &RigidTransform::identity(), cfg.tau_ov)?;
            Ok((q, ov))
        };

        // Overlap falls as the wedges separate; bisect the offset.
        let accept = |ov: f64| (ov - cfg.overlap).abs() <= 0.6 * OVERLAP_TOLERANCE;
        let mut track = |ov: f64| {
            if best.is_nan() || (ov - cfg.overlap).abs() < (best - cfg.overlap).abs() {
                best = ov;
            }
        };
        let (q0, ov0) = target_for(0.0)?;
        track(ov0);
        let mut found = None;
        if accept(ov0) || (cfg.overlap >= 1.0 && ov0 >= 1.0) {
            found = Some(q0);
        } else if ov0 > cfg.overlap {
            let (mut lo, mut hi) = (0.0f64, WEDGE_DEG + 30.0);
            for _ in 0..30 {
                let mid = 0.5 * (lo + hi);
                let (q, ov) = target_for(mid)?;
                track(ov);
                if accept(ov) {
                    found = Some(q);
                    break;
                }
                if ov > cfg.overlap {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        let Some(q) = found else {
            continue;
        };
        let world_a = PointCloud::with_viewpoint(pts_a, eye_a);
        let source = apply_transform(&gt.inverse(), &world_a)?;
        let source = PointCloud {
            points: source.points,
            viewpoint: Some(gt.inverse().apply(&eye_a)),
        };
        let measured = overlap_ratio(&source, &q, &gt, cfg.tau_ov)?;
        if (measured - cfg.overlap).abs() > OVERLAP_TOLERANCE {
            continue;
        }
        let cs = synthetic_correspondences(&source, &q, &gt, &cfg.corruptor(), &mut rng)?;
        let pair = PairRecord {
            source,
            target: q,
            ground_truth: gt,
            pair_id: format!("scene-{:016x}", cfg.seed),
        };
        return Ok((pair, cs));
    }
    Err(Error::OverlapUnachievable {
        target: cfg.overlap,
        best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{dist2, estimate_rigid};
    use crate::metrics::{inlier_count, rotation_error, translation_error};

    fn small(seed: u64) -> SyntheticSceneConfig {
        SyntheticSceneConfig {
            points_per_view: 600,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn overlap_target_is_met() {
        for (i, target) in [0.15, 0.3, 0.5, 0.7, 0.9].into_iter().enumerate() {
            let cfg = SyntheticSceneConfig { overlap: target, ..small(i as u64) };
            let (pair, _) = generate_scene_pair(&cfg).unwrap();
            let ov = overlap_ratio(&pair.source, &pair.target, &pair.ground_truth, cfg.tau_ov).unwrap();
            assert!((ov - target).abs() <= 0.05, "target {target}, measured {ov}");
            assert_ne!(pair.source.viewpoint, None);
            assert_ne!(pair.target.viewpoint, None);
        }
    }

    #[test]
    fn full_overlap_gives_identical_views() {
        let cfg = SyntheticSceneConfig { overlap: 1.0, ..small(4) };
        let (pair, _) = generate_scene_pair(&cfg).unwrap();
        let moved = apply_transform(&pair.ground_truth, &pair.source).unwrap();
        assert_eq!(moved.len(), pair.target.len());
        for (a, b) in moved.points.iter().zip(&pair.target.points) {
            assert!(dist2(a, b) < 1e-20);
        }
    }

    #[test]
    fn inlier_ratio_recounted_under_gt() {
        for (i, r) in [0.02, 0.05, 0.1, 0.2].into_iter().enumerate() {
            let cfg = SyntheticSceneConfig { inlier_ratio: r, ..small(10 + i as u64) };
            let (pair, cs) = generate_scene_pair(&cfg).unwrap();
            let measured = inlier_count(&pair.ground_truth, &cs, cfg.tau_in) as f64 / cs.len() as f64;
            assert!((measured - r).abs() <= 0.02);
        }
    }

    #[test]
    fn noiseless_inliers_give_exact_fit() {
        let cfg = SyntheticSceneConfig {
            inlier_ratio: 1.0,
            noise: 0.0,
            decoy_fraction: 0.0,
            correspondence_count: 30,
            ..small(20)
        };
        let (pair, cs) = generate_scene_pair(&cfg).unwrap();
        for w in cs.items.windows(3).take(10) {
            let src: Vec<Vec3> = w.iter().map(|c| c.src).collect();
            let tgt: Vec<Vec3> = w.iter().map(|c| c.tgt).collect();
            let Ok(fit) = estimate_rigid(&src, &tgt) else { continue };
            assert!(rotation_error(&fit.rotation, &pair.ground_truth.rotation) <= 1e-6);
            assert!(translation_error(&fit.translation, &pair.ground_truth.translation) <= 1e-6);
        }
    }

    #[test]
    fn deterministic() {
        let a = generate_scene_pair(&small(33)).unwrap();
        let b = generate_scene_pair(&small(33)).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn unreachable_overlap_reports_best() {
        // Three points per view only allow overlaps in thirds.
        let cfg = SyntheticSceneConfig { points_per_view: 3, overlap: 0.5, ..small(1) };
        match generate_scene_pair(&cfg) {
            Err(Error::OverlapUnachievable { target, best }) => {
                assert_eq!(target, 0.5);
                assert!((best - 0.5).abs() > 0.05);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
