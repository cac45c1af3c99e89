//! Registration by scored hypothesis selection: rank hypotheses by inlier
//! count, drop those that put source points into observed free space, then
//! scan the survivors in rank order with a trained scorer, stopping at the
//! first confident one.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decision::{Label, PreparedPair, Scorer};
use crate::error::{Error, Result};
use crate::geom::{PointCloud, RigidTransform, Vec3};
use crate::hypgen::{generate_hypotheses, CorrespondenceSet, HypGenConfig, Hypothesis};
use crate::metrics::{FreeSpaceGrid, SvcConfig};
use crate::tolerances::{
    CANDIDATE_CAP, DECISION_THRESHOLD, HYPOTHESIS_COUNT, SCORE_THRESHOLD, TAU_C, TAU_IN, TAU_OV,
    TAU_SC,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Candidates kept after the sight-view filter.
    pub m: usize,
    /// A candidate scoring strictly above this ends the scan.
    pub score_threshold: f64,
    /// Coordinate scale applied before scoring.
    pub scale: f64,
    pub svc: SvcConfig,
    pub tau_in: f64,
    pub tau_sc: f64,
    pub tau_ov: f64,
    pub tau_c: f64,
    /// Hypotheses generated per pair.
    pub k: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            m: CANDIDATE_CAP,
            score_threshold: SCORE_THRESHOLD,
            scale: 1.0,
            svc: SvcConfig::default(),
            tau_in: TAU_IN,
            tau_sc: TAU_SC,
            tau_ov: TAU_OV,
            tau_c: TAU_C,
            k: HYPOTHESIS_COUNT,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::InvalidConfig("m must be at least 1".into()));
        }
        if !(self.score_threshold > 0.0 && self.score_threshold <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "score threshold {} outside (0, 1]",
                self.score_threshold
            )));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidConfig(format!("scale {} must be positive", self.scale)));
        }
        if self.k < 1 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        Ok(())
    }

    pub fn hypgen(&self) -> HypGenConfig {
        HypGenConfig {
            k: self.k,
            tau_sc: self.tau_sc,
            tau_in: self.tau_in,
            seed: self.seed,
            ..HypGenConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegistrationOutcome {
    pub transform: RigidTransform,
    pub score: f64,
    /// Hypotheses scored before the scan ended.
    pub scanned: usize,
    /// The scan stopped early on a score above the threshold.
    pub truncated: bool,
    /// Rank of the chosen hypothesis in the generated list.
    pub rank: usize,
    /// No hypothesis passed the sight-view filter, so the unfiltered top `m`
    /// were scanned.
    pub svc_fallback: bool,
}

/// The first `m` hypotheses in rank order that pass the sight-view filter,
/// and whether the filter had to be bypassed because none passed.
///
/// Without a viewpoint on either cloud, or with the filter disabled, the
/// first `m` hypotheses are kept.
pub fn svc_candidates<'h>(
    p: &PointCloud,
    q: &PointCloud,
    hyps: &'h [Hypothesis],
    svc: &SvcConfig,
    m: usize,
) -> Result<(Vec<&'h Hypothesis>, bool)> {
    let unfiltered = || hyps.iter().take(m).collect::<Vec<_>>();
    if !svc.enabled || p.viewpoint.is_none() || q.viewpoint.is_none() {
        return Ok((unfiltered(), false));
    }
    let free = FreeSpaceGrid::from_cloud(q, svc.grid)?;
    let mut moved: Vec<Vec3> = Vec::with_capacity(p.len());
    let mut kept = Vec::new();
    for h in hyps {
        if kept.len() == m {
            break;
        }
        moved.clear();
        moved.extend(p.points.iter().map(|x| h.transform.apply(x)));
        if free.violation_ratio(&moved) <= svc.max_violation {
            kept.push(h);
        }
    }
    if kept.is_empty() {
        log::debug!("no hypothesis passed the sight-view filter; scanning unfiltered");
        return Ok((unfiltered(), true));
    }
    Ok((kept, false))
}

/// Scans `hyps` (already ranked) and picks one.
///
/// Candidates are scored in rank order; the first with a score strictly
/// above `cfg.score_threshold` is returned at once. Otherwise the highest
/// score wins, the lower rank on ties. Scores may be computed in parallel
/// batches, but the result equals the sequential scan.
pub fn select(
    p: &PointCloud,
    q: &PointCloud,
    hyps: &[Hypothesis],
    scorer: &dyn Scorer,
    cfg: &PipelineConfig,
) -> Result<RegistrationOutcome> {
    cfg.validate()?;
    if hyps.is_empty() {
        return Err(Error::AllSubsetsDegenerate);
    }
    let (candidates, svc_fallback) = svc_candidates(p, q, hyps, &cfg.svc, cfg.m)?;
    let pair = PreparedPair::new(p, q, cfg.scale);
    // Already inside a parallel loop over pairs: score one at a time.
    let batch = if rayon::current_thread_index().is_some() {
        1
    } else {
        rayon::current_num_threads().max(1)
    };

    let mut best: Option<(f64, &Hypothesis)> = None;
    let mut scanned = 0;
    for chunk in candidates.chunks(batch) {
        let scores: Vec<f64> = if chunk.len() == 1 {
            vec![scorer.score_hypothesis(&pair, &chunk[0].transform)?]
        } else {
            chunk
                .par_iter()
                .map(|h| scorer.score_hypothesis(&pair, &h.transform))
                .collect::<Result<_>>()?
        };
        for (h, s) in chunk.iter().zip(scores) {
            scanned += 1;
            if s > cfg.score_threshold {
                return Ok(RegistrationOutcome {
                    transform: h.transform,
                    score: s,
                    scanned,
                    truncated: true,
                    rank: h.rank,
                    svc_fallback,
                });
            }
            if best.is_none_or(|(b, _)| s > b) {
                best = Some((s, h));
            }
        }
    }
    let (score, h) = best.expect("at least one candidate");
    Ok(RegistrationOutcome {
        transform: h.transform,
        score,
        scanned,
        truncated: false,
        rank: h.rank,
        svc_fallback,
    })
}

/// Generates ranked hypotheses from `cs` and selects one with `scorer`.
pub fn register(
    p: &PointCloud,
    q: &PointCloud,
    cs: &CorrespondenceSet,
    scorer: &dyn Scorer,
    cfg: &PipelineConfig,
) -> Result<RegistrationOutcome> {
    cfg.validate()?;
    if cs.len() < 3 {
        return Err(Error::InsufficientCorrespondences {
            needed: 3,
            got: cs.len(),
        });
    }
    let hyps = generate_hypotheses(cs, &cfg.hypgen())?;
    select(p, q, &hyps, scorer, cfg)
}

/// Positive (predicted correct) iff `score ≥ threshold`.
pub fn classify_outcome(o: &RegistrationOutcome, threshold: f64) -> Label {
    if o.score >= threshold {
        Label::Correct
    } else {
        Label::Wrong
    }
}

/// [`classify_outcome`] at the default threshold of 0.5.
pub fn classify_default(o: &RegistrationOutcome) -> Label {
    classify_outcome(o, DECISION_THRESHOLD)
}
