use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::run::{prepare_pairs, BenchPair};
use crate::decision::Scorer;
use crate::error::{Error, Result};
use crate::metrics::{is_success, SuccessThreshold};
use crate::pipeline::{select, PipelineConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    M,
    ScoreThreshold,
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "m" => Ok(SweepAxis::M),
            "score_threshold" | "score-threshold" | "threshold" => Ok(SweepAxis::ScoreThreshold),
            _ => Err(format!("unknown sweep axis `{s}` (expected m or score_threshold)")),
        }
    }
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::M => "m",
            SweepAxis::ScoreThreshold => "score_threshold",
        }
    }

    fn apply(self, cfg: &PipelineConfig, value: f64) -> Result<PipelineConfig> {
        let mut c = *cfg;
        match self {
            SweepAxis::M => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::InvalidConfig(format!("m must be a positive integer, got {value}")));
                }
                c.m = value as usize;
            }
            SweepAxis::ScoreThreshold => c.score_threshold = value,
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub rr: f64,
    /// Mean per-pair seconds: hypothesis generation plus filtering and
    /// scoring at this value.
    pub mean_runtime: f64,
}

/// Decision-policy benchmark at every value of `axis` on the same pairs.
///
/// Hypotheses are generated once. Each pair runs every value back to back,
/// so drift in machine speed during the sweep is shared across values; the
/// runtime adds the pair's generation time to each value's filter and scan.
pub fn sweep_parameters(
    axis: SweepAxis,
    values: &[f64],
    cfg: &PipelineConfig,
    pairs: &[BenchPair],
    voxel: f64,
    scorer: &dyn Scorer,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::InvalidConfig("no sweep values".into()));
    }
    let cfgs: Vec<PipelineConfig> = values.iter().map(|&v| axis.apply(cfg, v)).collect::<Result<_>>()?;
    let cached = prepare_pairs(pairs, cfg, voxel)?;
    let th = SuccessThreshold::default();
    // Per pair, per value: (success, seconds).
    let runs: Vec<Vec<(bool, f64)>> = cached
        .par_iter()
        .map(|c| {
            cfgs.iter()
                .map(|vc| {
                    let Ok(hyps) = &c.hypotheses else {
                        return (false, c.generation_seconds);
                    };
                    let start = Instant::now();
                    let outcome = select(&c.source, &c.target, hyps, scorer, vc);
                    let secs = c.generation_seconds + start.elapsed().as_secs_f64();
                    (outcome.is_ok_and(|o| is_success(&o.transform, &c.ground_truth, &th)), secs)
                })
                .collect()
        })
        .collect();
    let n = runs.len() as f64;
    Ok(values
        .iter()
        .enumerate()
        .map(|(j, &v)| SweepRow {
            value: v,
            rr: runs.iter().filter(|r| r[j].0).count() as f64 / n,
            mean_runtime: runs.iter().map(|r| r[j].1).sum::<f64>() / n,
        })
        .collect())
}

/// Tab-separated table with a header row.
pub fn sweep_table(axis: SweepAxis, rows: &[SweepRow]) -> String {
    let mut s = format!("{}\trr\tmean_runtime_s\n", axis.name());
    for r in rows {
        let _ = writeln!(s, "{}\t{}\t{}", r.value, r.rr, r.mean_runtime);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{generate_pairs, run_prepared, PairSetConfig, Policy, SyntheticSceneConfig};
    use crate::decision::TaggedMergedCloud;

    /// Prefers alignments whose merged cloud has a small bounding box.
    struct Compact;

    impl Scorer for Compact {
        fn score_merged(&self, m: &TaggedMergedCloud, _: f64) -> Result<f64> {
            let r = m.points.iter().map(|p| p.pos.norm()).fold(0.0, f64::max);
            Ok(1.0 / (1.0 + r))
        }
    }

    #[test]
    fn rows_match_independent_benchmark_runs() {
        let set = PairSetConfig {
            scene: SyntheticSceneConfig {
                points_per_view: 300,
                inlier_ratio: 0.2,
                ..Default::default()
            },
            pair_count: 4,
            overlap_range: [0.4, 0.7],
            seed: 5,
        };
        let pairs = generate_pairs(&set).unwrap();
        let cfg = PipelineConfig { k: 20, ..Default::default() };
        let values = [0.2, 0.9];
        let rows = sweep_parameters(SweepAxis::ScoreThreshold, &values, &cfg, &pairs, 0.05, &Compact).unwrap();
        let cached = prepare_pairs(&pairs, &cfg, 0.05).unwrap();
        for (row, v) in rows.iter().zip(values) {
            let c = SweepAxis::ScoreThreshold.apply(&cfg, v).unwrap();
            let report = run_prepared(&cached, &Compact, &c, Policy::Decision, false).unwrap();
            assert_eq!(row.value, v);
            assert_eq!(row.rr, report.rr);
            assert!(row.mean_runtime > 0.0);
        }
        let table = sweep_table(SweepAxis::ScoreThreshold, &rows);
        assert_eq!(table.lines().count(), 3);
        assert!(table.starts_with("score_threshold\trr\tmean_runtime_s\n"));
    }

    #[test]
    fn bad_m_is_rejected() {
        let cfg = PipelineConfig::default();
        assert!(SweepAxis::M.apply(&cfg, 0.0).is_err());
        assert!(SweepAxis::M.apply(&cfg, 2.5).is_err());
        assert_eq!("threshold".parse::<SweepAxis>().unwrap(), SweepAxis::ScoreThreshold);
    }
}
