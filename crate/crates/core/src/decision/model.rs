use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::features::ARITY;
use super::{
    extract_features, FeatureConfig, FeatureVector, PreparedPair, Scorer, TaggedMergedCloud,
    TargetContext,
};
use crate::error::{Error, Result};
use crate::geom::RigidTransform;

/// The two class logits: correct (`v_t`) and wrong (`v_f`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreLogits {
    pub v_t: f64,
    pub v_f: f64,
}

/// Softmax probability of the correct class, computed after shifting by the
/// larger logit so it never overflows.
pub fn logits_to_score(l: ScoreLogits) -> f64 {
    let m = l.v_t.max(l.v_f);
    let et = (l.v_t - m).exp();
    let ef = (l.v_f - m).exp();
    et / (et + ef)
}

const FORMAT_VERSION: u32 = 1;

/// Logistic model over standardized features.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorerModel {
    pub weights: [f64; ARITY],
    pub bias: f64,
    pub means: [f64; ARITY],
    pub stds: [f64; ARITY],
    pub with_tags: bool,
    pub features: FeatureConfig,
    pub final_loss: f64,
}

impl ScorerModel {
    pub fn logits(&self, f: &FeatureVector) -> ScoreLogits {
        let mut v_t = self.bias;
        for i in 0..ARITY {
            v_t += self.weights[i] * (f.values[i] - self.means[i]) / self.stds[i];
        }
        ScoreLogits { v_t, v_f: 0.0 }
    }

    pub fn score_features(&self, f: &FeatureVector) -> f64 {
        logits_to_score(self.logits(f))
    }

    /// Stable 64-bit FNV-1a digest of the parameters.
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for b in bytes {
                h ^= *b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for v in self
            .weights
            .iter()
            .chain([self.bias].iter())
            .chain(self.means.iter())
            .chain(self.stds.iter())
        {
            eat(&v.to_le_bytes());
        }
        eat(&[self.with_tags as u8]);
        for v in [self.features.tau_ov, self.features.tau_c, self.features.svc_grid] {
            eat(&v.to_le_bytes());
        }
        eat(&(self.features.tag_mix_k as u64).to_le_bytes());
        eat(&self.features.retag_seed.to_le_bytes());
        h
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut s = String::new();
        let f = &self.features;
        let _ = writeln!(s, "version={FORMAT_VERSION}");
        let _ = writeln!(s, "arity={ARITY}");
        let _ = writeln!(s, "with_tags={}", self.with_tags);
        let _ = writeln!(s, "digest={:016x}", self.digest());
        let _ = writeln!(s, "final_loss={}", self.final_loss);
        let _ = writeln!(s, "tau_ov={}", f.tau_ov);
        let _ = writeln!(s, "tau_c={}", f.tau_c);
        let _ = writeln!(s, "tag_mix_k={}", f.tag_mix_k);
        let _ = writeln!(s, "svc_grid={}", f.svc_grid);
        let _ = writeln!(s, "retag_seed={}", f.retag_seed);
        let _ = writeln!(s, "bias={}", self.bias);
        for (key, vals) in [("weight", &self.weights), ("mean", &self.means), ("stddev", &self.stds)] {
            for v in vals {
                let _ = writeln!(s, "{key}={v}");
            }
        }
        fs::write(path, s)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut weights = Vec::new();
        let mut means = Vec::new();
        let mut stds = Vec::new();
        let mut features = FeatureConfig::default();
        let mut bias = None;
        let mut with_tags = None;
        let mut arity = None;
        let mut digest = None;
        let mut final_loss = f64::NAN;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| Error::parse(path, n + 1, msg.to_string());
            let (k, v) = line.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            let num = || v.parse::<f64>().map_err(|_| bad("malformed number"));
            match k {
                "version" => {
                    if v != FORMAT_VERSION.to_string() {
                        return Err(bad("unsupported model version"));
                    }
                }
                "arity" => arity = Some(v.parse::<usize>().map_err(|_| bad("malformed arity"))?),
                "with_tags" => with_tags = Some(v.parse::<bool>().map_err(|_| bad("malformed flag"))?),
                "digest" => digest = Some(u64::from_str_radix(v, 16).map_err(|_| bad("malformed digest"))?),
                "final_loss" => final_loss = num()?,
                "tau_ov" => features.tau_ov = num()?,
                "tau_c" => features.tau_c = num()?,
                "svc_grid" => features.svc_grid = num()?,
                "tag_mix_k" => features.tag_mix_k = v.parse().map_err(|_| bad("malformed count"))?,
                "retag_seed" => features.retag_seed = v.parse().map_err(|_| bad("malformed seed"))?,
                "bias" => bias = Some(num()?),
                "weight" => weights.push(num()?),
                "mean" => means.push(num()?),
                "stddev" => stds.push(num()?),
                _ => return Err(bad("unknown key")),
            }
        }
        let expected = ARITY;
        let got = arity.unwrap_or(weights.len());
        for len in [got, weights.len(), means.len(), stds.len()] {
            if len != expected {
                return Err(Error::ArityMismatch { expected, got: len });
            }
        }
        let model = ScorerModel {
            weights: weights.try_into().unwrap(),
            bias: bias.ok_or_else(|| Error::parse(path, 0, "missing bias"))?,
            means: means.try_into().unwrap(),
            stds: stds.try_into().unwrap(),
            with_tags: with_tags.unwrap_or(true),
            features,
            final_loss,
        };
        model.check()?;
        if let Some(d) = digest {
            if d != model.digest() {
                return Err(Error::parse(path, 0, "digest does not match parameters"));
            }
        }
        Ok(model)
    }

    fn check(&self) -> Result<()> {
        let finite = self
            .weights
            .iter()
            .chain(&self.means)
            .chain(&self.stds)
            .chain([self.bias].iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("model parameter"));
        }
        if self.stds.iter().any(|&s| s <= 0.0) {
            return Err(Error::InvalidConfig("feature standard deviations must be positive".into()));
        }
        Ok(())
    }

    fn prepared_context<'p>(&self, pair: &'p PreparedPair<'_>) -> Option<&'p TargetContext> {
        let entry = pair.target_cache.get_or_init(|| {
            let q = pair.target.scaled(pair.scale);
            TargetContext::new(&q.points, q.viewpoint, &self.features)
                .ok()
                .map(|ctx| (self.features, ctx))
        });
        entry
            .as_ref()
            .filter(|(cfg, _)| *cfg == self.features)
            .map(|(_, ctx)| ctx)
    }
}

impl Scorer for ScorerModel {
    fn score_merged(&self, m: &TaggedMergedCloud, scale: f64) -> Result<f64> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidConfig(format!("scale must be positive, got {scale}")));
        }
        let f = extract_features(&m.scaled(scale), &self.features, self.with_tags)?;
        Ok(self.score_features(&f))
    }

    fn score_hypothesis(&self, pair: &PreparedPair<'_>, t: &RigidTransform) -> Result<f64> {
        // Retagging ablation needs the whole merged cloud.
        if !self.with_tags || !(pair.scale.is_finite() && pair.scale > 0.0) {
            return self.score_merged(&pair.merged(t)?, pair.scale);
        }
        let Some(ctx) = self.prepared_context(pair) else {
            return self.score_merged(&pair.merged(t)?, pair.scale);
        };
        let moved = crate::geom::apply_transform(t, pair.source)?;
        let source: Vec<_> = moved.points.iter().map(|p| p * pair.scale).collect();
        if source.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite("merged cloud coordinate"));
        }
        Ok(self.score_features(&ctx.features(&source, &self.features)?))
    }
}
