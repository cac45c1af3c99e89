use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scene::{generate_scene_pair, SyntheticSceneConfig};
use crate::datasetgen::PairRecord;
use crate::decision::{Confusion, Label, PreparedPair, Scorer};
use crate::error::{Error, Result};
use crate::geom::{voxel_downsample, PointCloud, RigidTransform};
use crate::hypgen::{generate_hypotheses, CorrespondenceSet, HypGenConfig, Hypothesis};
use crate::metrics::{is_success, mean, median, PairResult, SuccessThreshold};
use crate::pipeline::{select, svc_candidates, PipelineConfig};
use crate::seeding::{derive_seed, item_rng};
use crate::tolerances::DECISION_THRESHOLD;

pub const REPORT_SCHEMA: &str = "dpcr-bench/1";
pub const TOP_M: [usize; 4] = [1, 10, 50, 100];

/// How a hypothesis is chosen from the ranked list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// Sight-view filter plus scored scan with early truncation.
    Decision,
    /// The hypothesis with the most inliers (rank 0).
    Mic,
}

/// A pair to register, with its correspondences.
#[derive(Debug, Clone)]
pub struct BenchPair {
    pub pair: PairRecord,
    pub correspondences: CorrespondenceSet,
}

/// A pair with its (downsampled) clouds and generated hypotheses, reusable
/// across policies and parameter values.
#[derive(Debug, Clone)]
pub struct CachedPair {
    pub pair_id: String,
    pub source: PointCloud,
    pub target: PointCloud,
    pub ground_truth: RigidTransform,
    pub hypotheses: std::result::Result<Vec<Hypothesis>, String>,
    pub generation_seconds: f64,
}

fn downsample(c: &PointCloud, voxel: f64) -> Result<PointCloud> {
    if voxel > 0.0 {
        voxel_downsample(c, voxel)
    } else {
        Ok(c.clone())
    }
}

/// Downsamples every pair and generates its hypotheses; pair `i` uses
/// hypothesis seed `derive_seed(cfg.seed, i)`.
pub fn prepare_pairs(pairs: &[BenchPair], cfg: &PipelineConfig, voxel: f64) -> Result<Vec<CachedPair>> {
    cfg.validate()?;
    pairs
        .par_iter()
        .enumerate()
        .map(|(i, bp)| {
            let source = downsample(&bp.pair.source, voxel)?;
            let target = downsample(&bp.pair.target, voxel)?;
            let hg = HypGenConfig {
                seed: derive_seed(cfg.seed, i as u64),
                ..cfg.hypgen()
            };
            let start = Instant::now();
            let hyps = if bp.correspondences.len() < 3 {
                Err(Error::InsufficientCorrespondences {
                    needed: 3,
                    got: bp.correspondences.len(),
                })
            } else {
                generate_hypotheses(&bp.correspondences, &hg)
            };
            Ok(CachedPair {
                pair_id: bp.pair.pair_id.clone(),
                source,
                target,
                ground_truth: bp.pair.ground_truth,
                hypotheses: hyps.map_err(|e| e.to_string()),
                generation_seconds: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEntry {
    #[serde(flatten)]
    pub result: PairResult,
    /// Rank of the chosen hypothesis.
    pub rank: Option<usize>,
    pub scanned: usize,
    pub truncated: bool,
    pub svc_fallback: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub mean_re_success: Option<f64>,
    pub median_re_success: Option<f64>,
    pub mean_te_success: Option<f64>,
    pub median_te_success: Option<f64>,
    pub mean_re_all: Option<f64>,
    pub median_re_all: Option<f64>,
    pub mean_te_all: Option<f64>,
    pub median_te_all: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopMEntry {
    pub m: usize,
    /// Over the ranked hypothesis list.
    pub rr: f64,
    /// Over the sight-view-filtered list.
    pub rr_svc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuntimeStats {
    pub mean_seconds: f64,
    pub median_seconds: f64,
    pub total_seconds: f64,
}

/// Benchmark outcome. Field order is the serialization order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema: String,
    pub policy: Policy,
    pub pair_count: usize,
    pub success_count: usize,
    pub failed_pairs: usize,
    pub rr: f64,
    pub errors: ErrorSummary,
    pub top_m_rr: Vec<TopMEntry>,
    /// Predicted correct (score ≥ 0.5) against actual success.
    pub confusion: Confusion,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub runtime: Option<RuntimeStats>,
    pub config: serde_json::Value,
    pub pairs: Vec<PairEntry>,
}

impl BenchmarkReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn summary_line(&self) -> String {
        format!(
            "policy={:?} pairs={} successes={} rr={:.4}",
            self.policy, self.pair_count, self.success_count, self.rr
        )
        .to_lowercase()
    }
}

struct PairRun {
    entry: PairEntry,
    ranked: Vec<RigidTransform>,
    filtered: Vec<RigidTransform>,
}

fn run_pair(c: &CachedPair, scorer: &dyn Scorer, cfg: &PipelineConfig, policy: Policy, th: &SuccessThreshold) -> PairRun {
    let failed = |msg: String| PairRun {
        entry: PairEntry {
            result: PairResult::failed(c.pair_id.clone(), c.ground_truth, msg),
            rank: None,
            scanned: 0,
            truncated: false,
            svc_fallback: false,
            seconds: None,
        },
        ranked: Vec::new(),
        filtered: Vec::new(),
    };
    let hyps = match &c.hypotheses {
        Ok(h) => h,
        Err(msg) => return failed(msg.clone()),
    };
    let start = Instant::now();
    let chosen = match policy {
        Policy::Decision => select(&c.source, &c.target, hyps, scorer, cfg)
            .map(|o| (o.transform, o.score, o.rank, o.scanned, o.truncated, o.svc_fallback)),
        Policy::Mic => {
            let h = &hyps[0];
            let pair = PreparedPair::new(&c.source, &c.target, cfg.scale);
            scorer
                .score_hypothesis(&pair, &h.transform)
                .map(|s| (h.transform, s, h.rank, 0, false, false))
        }
    };
    let seconds = c.generation_seconds + start.elapsed().as_secs_f64();
    let (transform, score, rank, scanned, truncated, svc_fallback) = match chosen {
        Ok(x) => x,
        Err(e) => return failed(e.to_string()),
    };
    let filtered = match svc_candidates(&c.source, &c.target, hyps, &cfg.svc, hyps.len()) {
        Ok((kept, _)) => kept.iter().map(|h| h.transform).collect(),
        Err(_) => Vec::new(),
    };
    PairRun {
        entry: PairEntry {
            result: PairResult::evaluate(c.pair_id.clone(), transform, c.ground_truth, score, th),
            rank: Some(rank),
            scanned,
            truncated,
            svc_fallback,
            seconds: Some(seconds),
        },
        ranked: hyps.iter().map(|h| h.transform).collect(),
        filtered,
    }
}

fn top_m(lists: &[Vec<RigidTransform>], gts: &[RigidTransform], th: &SuccessThreshold, m: usize) -> f64 {
    let hits = lists
        .iter()
        .zip(gts)
        .filter(|(l, gt)| l.iter().take(m).any(|t| is_success(t, gt, th)))
        .count();
    hits as f64 / lists.len() as f64
}

/// Runs `policy` on cached pairs. Pairs are evaluated in parallel and
/// reduced in order; with `include_runtime` off the report is a pure
/// function of its inputs.
pub fn run_prepared(
    pairs: &[CachedPair],
    scorer: &dyn Scorer,
    cfg: &PipelineConfig,
    policy: Policy,
    include_runtime: bool,
) -> Result<BenchmarkReport> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(Error::EmptyResultSet);
    }
    let th = SuccessThreshold::default();
    let runs: Vec<PairRun> = pairs
        .par_iter()
        .map(|c| run_pair(c, scorer, cfg, policy, &th))
        .collect();

    let n = runs.len();
    let results: Vec<&PairResult> = runs.iter().map(|r| &r.entry.result).collect();
    let success_count = results.iter().filter(|r| r.success).count();
    let failed_pairs = results.iter().filter(|r| r.error.is_some()).count();
    let pick = |f: &dyn Fn(&PairResult) -> f64, only_success: bool| -> Vec<f64> {
        results
            .iter()
            .filter(|r| r.error.is_none() && (!only_success || r.success))
            .map(|r| f(r))
            .collect()
    };
    let (re_s, te_s) = (pick(&|r| r.re, true), pick(&|r| r.te, true));
    let (re_a, te_a) = (pick(&|r| r.re, false), pick(&|r| r.te, false));
    let errors = ErrorSummary {
        mean_re_success: mean(&re_s),
        median_re_success: median(&re_s),
        mean_te_success: mean(&te_s),
        median_te_success: median(&te_s),
        mean_re_all: mean(&re_a),
        median_re_all: median(&re_a),
        mean_te_all: mean(&te_a),
        median_te_all: median(&te_a),
    };

    let gts: Vec<RigidTransform> = pairs.iter().map(|c| c.ground_truth).collect();
    let ranked: Vec<Vec<RigidTransform>> = runs.iter().map(|r| r.ranked.clone()).collect();
    let filtered: Vec<Vec<RigidTransform>> = runs.iter().map(|r| r.filtered.clone()).collect();
    let top_m_rr = TOP_M
        .iter()
        .map(|&m| TopMEntry {
            m,
            rr: top_m(&ranked, &gts, &th, m),
            rr_svc: top_m(&filtered, &gts, &th, m),
        })
        .collect();

    let mut confusion = Confusion::default();
    for r in &results {
        confusion.add(
            r.score >= DECISION_THRESHOLD,
            if r.success { Label::Correct } else { Label::Wrong },
        );
    }

    let mut entries: Vec<PairEntry> = runs.into_iter().map(|r| r.entry).collect();
    let runtime = if include_runtime {
        let secs: Vec<f64> = entries.iter().filter_map(|e| e.seconds).collect();
        Some(RuntimeStats {
            mean_seconds: mean(&secs).unwrap_or(0.0),
            median_seconds: median(&secs).unwrap_or(0.0),
            total_seconds: secs.iter().sum(),
        })
    } else {
        for e in &mut entries {
            e.seconds = None;
        }
        None
    };

    Ok(BenchmarkReport {
        schema: REPORT_SCHEMA.to_string(),
        policy,
        pair_count: n,
        success_count,
        failed_pairs,
        rr: success_count as f64 / n as f64,
        errors,
        top_m_rr,
        confusion,
        runtime,
        config: serde_json::json!({ "pipeline": cfg }),
        pairs: entries,
    })
}

/// Prepares `pairs` and runs `policy` on them.
pub fn run_benchmark(
    pairs: &[BenchPair],
    scorer: &dyn Scorer,
    cfg: &PipelineConfig,
    policy: Policy,
    voxel: f64,
    include_runtime: bool,
) -> Result<BenchmarkReport> {
    if pairs.is_empty() {
        return Err(Error::EmptyResultSet);
    }
    let cached = prepare_pairs(pairs, cfg, voxel)?;
    run_prepared(&cached, scorer, cfg, policy, include_runtime)
}

/// Scene settings for a batch of generated pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairSetConfig {
    pub scene: SyntheticSceneConfig,
    pub pair_count: usize,
    /// Overlap target of each pair, drawn uniformly from this range.
    pub overlap_range: [f64; 2],
    pub seed: u64,
}

impl Default for PairSetConfig {
    fn default() -> Self {
        PairSetConfig {
            scene: SyntheticSceneConfig::default(),
            pair_count: 200,
            overlap_range: [0.3, 0.8],
            seed: 0,
        }
    }
}

/// Pair `i` uses scene seed `derive_seed(seed, i)` and overlap target
/// drawn from a generator seeded the same way, so two sets that differ only
/// in correspondence settings share their geometry.
pub fn generate_pairs(cfg: &PairSetConfig) -> Result<Vec<BenchPair>> {
    let [lo, hi] = cfg.overlap_range;
    if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
        return Err(Error::InvalidConfig("overlap range must satisfy 0 < lo ≤ hi ≤ 1".into()));
    }
    (0..cfg.pair_count)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(cfg.seed, i as u64);
            let overlap = if lo == hi { lo } else { item_rng(seed, u64::MAX).random_range(lo..=hi) };
            let (mut pair, correspondences) = generate_scene_pair(&SyntheticSceneConfig {
                overlap,
                seed,
                ..cfg.scene
            })?;
            pair.pair_id = format!("pair-{i:04}");
            Ok(BenchPair { pair, correspondences })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumReport {
    pub inlier_ratio: f64,
    pub decision: BenchmarkReport,
    pub mic: BenchmarkReport,
    /// Top-K RR: share of pairs with any correct hypothesis.
    pub upper_bound_rr: f64,
    /// Decision RR minus MIC RR.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedReport {
    pub schema: String,
    pub strata: Vec<StratumReport>,
}

/// Both policies on the same pairs for every inlier ratio. All strata share
/// scene geometry (see [`generate_pairs`]); only correspondences differ.
pub fn stratified_benchmark(
    inlier_ratios: &[f64],
    pairs: &PairSetConfig,
    scorer: &dyn Scorer,
    cfg: &PipelineConfig,
    voxel: f64,
) -> Result<StratifiedReport> {
    if inlier_ratios.is_empty() {
        return Err(Error::InvalidConfig("no strata".into()));
    }
    let mut strata = Vec::new();
    for &ratio in inlier_ratios {
        let set = PairSetConfig {
            scene: SyntheticSceneConfig {
                inlier_ratio: ratio,
                ..pairs.scene
            },
            ..*pairs
        };
        let bench_pairs = generate_pairs(&set)?;
        let cached = prepare_pairs(&bench_pairs, cfg, voxel)?;
        let decision = run_prepared(&cached, scorer, cfg, Policy::Decision, false)?;
        let mic = run_prepared(&cached, scorer, cfg, Policy::Mic, false)?;
        let th = SuccessThreshold::default();
        let hits = cached
            .iter()
            .filter(|c| {
                c.hypotheses
                    .as_ref()
                    .is_ok_and(|h| h.iter().any(|x| is_success(&x.transform, &c.ground_truth, &th)))
            })
            .count();
        let upper_bound_rr = hits as f64 / cached.len() as f64;
        log::info!(
            "inlier ratio {ratio}: decision {:.3}, mic {:.3}, upper bound {:.3}",
            decision.rr,
            mic.rr,
            upper_bound_rr
        );
        strata.push(StratumReport {
            inlier_ratio: ratio,
            gap: decision.rr - mic.rr,
            decision,
            mic,
            upper_bound_rr,
        });
    }
    Ok(StratifiedReport {
        schema: REPORT_SCHEMA.to_string(),
        strata,
    })
}
