use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::ARITY;
use super::{extract_features, FeatureConfig, FeatureVector, ScorerModel, Scorer, TaggedMergedCloud};
use crate::error::{Error, Result};
use crate::tolerances::DECISION_THRESHOLD;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Correct,
    Wrong,
}

impl Label {
    pub fn is_correct(self) -> bool {
        self == Label::Correct
    }

    fn target(self) -> f64 {
        if self.is_correct() { 1.0 } else { 0.0 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub merged: &'a TaggedMergedCloud,
    pub label: Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub l2: f64,
    pub epochs: usize,
    /// Seeds the re-tagging when `with_tags` is off.
    pub seed: u64,
    pub with_tags: bool,
    /// Coordinates are multiplied by this before featurizing.
    pub scale: f64,
    pub features: FeatureConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.5,
            l2: 1e-4,
            epochs: 600,
            seed: 0,
            with_tags: true,
            scale: 1.0,
            features: FeatureConfig::default(),
        }
    }
}

impl TrainConfig {
    fn feature_config(&self) -> FeatureConfig {
        FeatureConfig {
            retag_seed: self.seed,
            ..self.features
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && self.l2 >= 0.0
            && self.l2.is_finite()
            && self.scale > 0.0
            && self.scale.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(
                "learning rate and scale must be positive, l2 non-negative".into(),
            ))
        }
    }
}

/// Features of every sample, in input order.
pub fn featurize(samples: &[Sample<'_>], cfg: &TrainConfig) -> Result<Vec<FeatureVector>> {
    let fc = cfg.feature_config();
    samples
        .par_iter()
        .map(|s| extract_features(&s.merged.scaled(cfg.scale), &fc, cfg.with_tags))
        .collect()
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Full-batch gradient descent on the L2-regularized logistic loss over
/// standardized features, starting from zero. Returns the model and the loss
/// before every epoch followed by the final loss.
pub fn train_on_features(
    features: &[FeatureVector],
    labels: &[Label],
    cfg: &TrainConfig,
) -> Result<(ScorerModel, Vec<f64>)> {
    cfg.validate()?;
    if features.len() != labels.len() {
        return Err(Error::LengthMismatch(features.len(), labels.len()));
    }
    let n_pos = labels.iter().filter(|l| l.is_correct()).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(Error::SingleClassDataset);
    }
    let n = features.len() as f64;

    let mut means = [0.0; ARITY];
    let mut stds = [0.0; ARITY];
    for i in 0..ARITY {
        means[i] = features.iter().map(|f| f.values[i]).sum::<f64>() / n;
        let var = features
            .iter()
            .map(|f| (f.values[i] - means[i]).powi(2))
            .sum::<f64>()
            / n;
        stds[i] = if var > 0.0 { var.sqrt() } else { 1.0 };
    }
    let xs: Vec<[f64; ARITY]> = features
        .iter()
        .map(|f| std::array::from_fn(|i| (f.values[i] - means[i]) / stds[i]))
        .collect();
    let ys: Vec<f64> = labels.iter().map(|l| l.target()).collect();

    let mut w = [0.0; ARITY];
    let mut b = 0.0;
    let loss = |w: &[f64; ARITY], b: f64| {
        let data: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let z = b + w.iter().zip(x).map(|(a, c)| a * c).sum::<f64>();
                // -[y log σ(z) + (1-y) log(1-σ(z))]
                y * softplus(-z) + (1.0 - y) * softplus(z)
            })
            .sum::<f64>()
            / n;
        data + 0.5 * cfg.l2 * w.iter().map(|v| v * v).sum::<f64>()
    };

    let mut history = Vec::with_capacity(cfg.epochs + 1);
    for epoch in 0..=cfg.epochs {
        let l = loss(&w, b);
        if !l.is_finite() {
            return Err(Error::NonFiniteLoss(epoch));
        }
        history.push(l);
        if epoch == cfg.epochs {
            break;
        }
        let mut gw = [0.0; ARITY];
        let mut gb = 0.0;
        for (x, y) in xs.iter().zip(&ys) {
            let z = b + w.iter().zip(x).map(|(a, c)| a * c).sum::<f64>();
            let r = sigmoid(z) - y;
            gb += r;
            for i in 0..ARITY {
                gw[i] += r * x[i];
            }
        }
        for i in 0..ARITY {
            w[i] -= cfg.learning_rate * (gw[i] / n + cfg.l2 * w[i]);
        }
        b -= cfg.learning_rate * gb / n;
    }

    let model = ScorerModel {
        weights: w,
        bias: b,
        means,
        stds,
        with_tags: cfg.with_tags,
        features: cfg.feature_config(),
        final_loss: *history.last().unwrap(),
    };
    Ok((model, history))
}

pub fn train_scorer(samples: &[Sample<'_>], cfg: &TrainConfig) -> Result<ScorerModel> {
    let features = featurize(samples, cfg)?;
    let labels: Vec<Label> = samples.iter().map(|s| s.label).collect();
    let (model, history) = train_on_features(&features, &labels, cfg)?;
    log::info!(
        "trained scorer on {} samples: loss {:.4} -> {:.4}",
        samples.len(),
        history[0],
        model.final_loss
    );
    Ok(model)
}

/// Counts with "correct" as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_positive: usize,
    pub false_negative: usize,
    pub false_positive: usize,
    pub true_negative: usize,
}

impl Confusion {
    pub fn add(&mut self, predicted_correct: bool, label: Label) {
        match (predicted_correct, label.is_correct()) {
            (true, true) => self.true_positive += 1,
            (false, true) => self.false_negative += 1,
            (true, false) => self.false_positive += 1,
            (false, false) => self.true_negative += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.true_positive + self.false_negative + self.false_positive + self.true_negative
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub correct_accuracy: f64,
    pub wrong_accuracy: f64,
    /// Per-class accuracies weighted by class support.
    pub weighted_accuracy: f64,
    pub confusion: Confusion,
}

/// Accuracy of thresholding `scores` at 0.5 (score ≥ 0.5 predicts correct).
pub fn evaluate_scores(scores: &[f64], labels: &[Label]) -> Result<AccuracyReport> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch(scores.len(), labels.len()));
    }
    let mut c = Confusion::default();
    for (s, l) in scores.iter().zip(labels) {
        c.add(*s >= DECISION_THRESHOLD, *l);
    }
    let pos = c.true_positive + c.false_negative;
    let neg = c.false_positive + c.true_negative;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClassDataset);
    }
    let correct_accuracy = c.true_positive as f64 / pos as f64;
    let wrong_accuracy = c.true_negative as f64 / neg as f64;
    let weighted_accuracy =
        (correct_accuracy * pos as f64 + wrong_accuracy * neg as f64) / (pos + neg) as f64;
    Ok(AccuracyReport {
        correct_accuracy,
        wrong_accuracy,
        weighted_accuracy,
        confusion: c,
    })
}

pub fn evaluate_scorer(scorer: &dyn Scorer, samples: &[Sample<'_>], scale: f64) -> Result<AccuracyReport> {
    let scores: Vec<f64> = samples
        .par_iter()
        .map(|s| scorer.score_merged(s.merged, scale))
        .collect::<Result<_>>()?;
    let labels: Vec<Label> = samples.iter().map(|s| s.label).collect();
    evaluate_scores(&scores, &labels)
}
