use serde::{Deserialize, Serialize};

use super::{rotation_error, translation_error};
use crate::error::{Error, Result};
use crate::geom::{dist2, RigidTransform};
use crate::hypgen::CorrespondenceSet;
use crate::tolerances::{SUCCESS_MAX_RE_DEG, SUCCESS_MAX_TE_M};

/// Maximum rotation (degrees) and translation (meters) errors of a
/// successful registration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuccessThreshold {
    pub max_re: f64,
    pub max_te: f64,
}

impl Default for SuccessThreshold {
    fn default() -> Self {
        SuccessThreshold {
            max_re: SUCCESS_MAX_RE_DEG,
            max_te: SUCCESS_MAX_TE_M,
        }
    }
}

impl SuccessThreshold {
    pub fn new(max_re: f64, max_te: f64) -> Result<Self> {
        if max_re > 0.0 && max_te > 0.0 {
            Ok(SuccessThreshold { max_re, max_te })
        } else {
            Err(Error::InvalidConfig(format!(
                "success threshold must be positive, got ({max_re}, {max_te})"
            )))
        }
    }

    pub fn accepts(&self, re: f64, te: f64) -> bool {
        re <= self.max_re && te <= self.max_te
    }
}

pub fn inlier_count(t: &RigidTransform, cs: &CorrespondenceSet, tau_in: f64) -> usize {
    let tau2 = tau_in * tau_in;
    cs.items
        .iter()
        .filter(|c| dist2(&t.apply(&c.src), &c.tgt) <= tau2)
        .count()
}

pub fn is_success(est: &RigidTransform, gt: &RigidTransform, th: &SuccessThreshold) -> bool {
    th.accepts(
        rotation_error(&est.rotation, &gt.rotation),
        translation_error(&est.translation, &gt.translation),
    )
}

/// Outcome of one registered pair against its ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub pair_id: String,
    pub estimated: RigidTransform,
    pub ground_truth: RigidTransform,
    pub score: f64,
    pub re: f64,
    pub te: f64,
    pub success: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl PairResult {
    pub fn evaluate(
        pair_id: impl Into<String>,
        estimated: RigidTransform,
        ground_truth: RigidTransform,
        score: f64,
        th: &SuccessThreshold,
    ) -> Self {
        let re = rotation_error(&estimated.rotation, &ground_truth.rotation);
        let te = translation_error(&estimated.translation, &ground_truth.translation);
        PairResult {
            pair_id: pair_id.into(),
            estimated,
            ground_truth,
            score,
            re,
            te,
            success: th.accepts(re, te),
            error: None,
        }
    }

    /// A pair that could not be registered; always unsuccessful.
    pub fn failed(pair_id: impl Into<String>, ground_truth: RigidTransform, error: String) -> Self {
        let mut r = PairResult::evaluate(
            pair_id,
            RigidTransform::identity(),
            ground_truth,
            0.0,
            &SuccessThreshold::default(),
        );
        r.success = false;
        r.error = Some(error);
        r
    }
}

pub fn registration_recall(results: &[PairResult]) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::EmptyResultSet);
    }
    let ok = results.iter().filter(|r| r.success).count();
    Ok(ok as f64 / results.len() as f64)
}

/// Fraction of pairs with at least one successful transform among their
/// first `min(m, K)` hypotheses.
pub fn top_m_rr(
    per_pair: &[(Vec<RigidTransform>, RigidTransform)],
    th: &SuccessThreshold,
    m: usize,
) -> Result<f64> {
    if per_pair.is_empty() {
        return Err(Error::EmptyResultSet);
    }
    if m == 0 {
        return Err(Error::InvalidConfig("top-m requires m ≥ 1".into()));
    }
    let hits = per_pair
        .iter()
        .filter(|(hyps, gt)| hyps.iter().take(m).any(|h| is_success(h, gt, th)))
        .count();
    Ok(hits as f64 / per_pair.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;
    use crate::hypgen::Correspondence;

    fn rot_z(deg: f64) -> RigidTransform {
        RigidTransform::from_axis_angle(&Vec3::z(), deg.to_radians(), Vec3::zeros())
    }

    #[test]
    fn success_boundaries() {
        let th = SuccessThreshold::new(15.0, 0.30).unwrap();
        let gt = RigidTransform::identity();
        assert!(is_success(&gt, &gt, &th));
        let mut inside = rot_z(14.9);
        inside.translation = Vec3::new(0.29, 0.0, 0.0);
        assert!(is_success(&inside, &gt, &th));
        let mut outside = rot_z(16.0);
        outside.translation = Vec3::new(0.01, 0.0, 0.0);
        assert!(!is_success(&outside, &gt, &th));
        assert!(SuccessThreshold::new(0.0, 1.0).is_err());
    }

    #[test]
    fn inlier_count_cases() {
        let t = rot_z(30.0);
        let items: Vec<_> = (0..10)
            .map(|i| {
                let s = Vec3::new(i as f64, 1.0, 0.5 * i as f64);
                Correspondence::new(s, t.apply(&s))
            })
            .collect();
        let cs = CorrespondenceSet::new(items, "synthetic");
        assert_eq!(inlier_count(&t, &cs, 0.1), 10);
        let far = t.compose(&RigidTransform::from_translation(Vec3::new(50.0, 0.0, 0.0)));
        assert_eq!(inlier_count(&far, &cs, 0.1), 0);
    }

    #[test]
    fn recall_fractions() {
        let gt = RigidTransform::identity();
        let th = SuccessThreshold::default();
        let good = PairResult::evaluate("a", gt, gt, 1.0, &th);
        let bad = PairResult::evaluate("b", rot_z(90.0), gt, 0.0, &th);
        assert_eq!(registration_recall(&[good.clone(), good.clone()]).unwrap(), 1.0);
        assert_eq!(
            registration_recall(&[good, bad.clone(), bad.clone(), bad]).unwrap(),
            0.25
        );
        assert!(matches!(registration_recall(&[]), Err(Error::EmptyResultSet)));
    }

    #[test]
    fn failed_pairs_are_unsuccessful() {
        let r = PairResult::failed("x", RigidTransform::identity(), "boom".into());
        assert!(!r.success);
    }

    #[test]
    fn top_m_edges() {
        let gt = RigidTransform::identity();
        let th = SuccessThreshold::default();
        let wrong = rot_z(90.0);
        let all_first = vec![(vec![gt, wrong], gt); 3];
        assert_eq!(top_m_rr(&all_first, &th, 1).unwrap(), 1.0);
        let none = vec![(vec![wrong; 5], gt); 3];
        assert_eq!(top_m_rr(&none, &th, 100).unwrap(), 0.0);
        let late = vec![(vec![wrong, wrong, gt], gt)];
        assert_eq!(top_m_rr(&late, &th, 2).unwrap(), 0.0);
        assert_eq!(top_m_rr(&late, &th, 3).unwrap(), 1.0);
        assert!(top_m_rr(&[], &th, 1).is_err());
    }
}
