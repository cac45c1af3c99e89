mod common;

use dpcr::bench::{prepare_pairs, run_prepared, Policy};
use dpcr::datasetgen::Category;
use dpcr::decision::Label;
use dpcr::metrics::{rotation_error, translation_error, SuccessThreshold};
use dpcr::pipeline::PipelineConfig;

#[test]
fn dataset_has_sound_labels_and_balanced_classes() {
    let pairs = common::mixed_pairs(5, &[0.05, 0.2], 800, 21);
    let data = common::dataset(&pairs, 21);
    let th = SuccessThreshold::default();
    let correct = data.iter().filter(|r| r.label == Label::Correct).count();
    let wrong = data.len() - correct;
    assert_eq!(correct, pairs.len(), "one ground-truth record per pair");
    let ratio = wrong as f64 / correct as f64;
    assert!((2.0..=5.0).contains(&ratio), "wrong:correct = {ratio}");
    for r in &data {
        let re = rotation_error(&r.transform.rotation, &r.ground_truth.rotation);
        let te = translation_error(&r.transform.translation, &r.ground_truth.translation);
        assert_eq!(th.accepts(re, te), r.label == Label::Correct, "{}", r.id);
        assert_eq!(r.category == Category::Correct, r.label == Label::Correct);
    }
}

#[test]
fn decision_policy_beats_inlier_count_at_low_inlier_ratio() {
    let model = common::trained_model(22);
    let pairs = common::mixed_pairs(50, &[0.03], 800, 23);
    let cfg = PipelineConfig::default();
    let cached = prepare_pairs(&pairs, &cfg, 0.05).unwrap();
    let decision = run_prepared(&cached, &model, &cfg, Policy::Decision, false).unwrap();
    let mic = run_prepared(&cached, &model, &cfg, Policy::Mic, false).unwrap();
    assert!(decision.rr >= mic.rr, "decision {} vs mic {}", decision.rr, mic.rr);
    assert!(decision.rr > 0.5, "decision rr {}", decision.rr);
    // Both policies are bounded by the oracle over the ranked list.
    let bound = decision.top_m_rr.last().unwrap().rr;
    assert!(bound >= decision.rr && bound >= mic.rr);
}
