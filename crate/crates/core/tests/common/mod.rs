#![allow(dead_code)]

use dpcr::bench::{generate_pairs, BenchPair, PairSetConfig, SyntheticSceneConfig};
use dpcr::datasetgen::{build_dataset, split_dataset, CorrespondenceSource, DatasetRecord, GenConfig};
use dpcr::decision::{Sample, ScorerModel, TrainConfig};
use dpcr::geom::Vec3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Scene settings used by the integration suites: small views keep runs short.
pub fn desk_scene(points_per_view: usize) -> SyntheticSceneConfig {
    SyntheticSceneConfig {
        points_per_view,
        ..Default::default()
    }
}

/// `per_ratio` pairs for each of the given inlier ratios, with distinct
/// geometry per ratio.
pub fn mixed_pairs(per_ratio: usize, ratios: &[f64], points_per_view: usize, seed: u64) -> Vec<BenchPair> {
    let mut out = Vec::new();
    for (k, &r) in ratios.iter().enumerate() {
        let set = PairSetConfig {
            scene: SyntheticSceneConfig {
                inlier_ratio: r,
                ..desk_scene(points_per_view)
            },
            pair_count: per_ratio,
            overlap_range: [0.3, 0.8],
            seed: seed.wrapping_mul(1000) + k as u64,
        };
        for mut bp in generate_pairs(&set).expect("scene generation") {
            bp.pair.pair_id = format!("r{k}-{}", bp.pair.pair_id);
            out.push(bp);
        }
    }
    out
}

pub fn dataset(pairs: &[BenchPair], seed: u64) -> Vec<DatasetRecord> {
    let records: Vec<_> = pairs.iter().map(|b| b.pair.clone()).collect();
    build_dataset(&records, CorrespondenceSource::Synthetic, &GenConfig::default(), seed).expect("dataset")
}

pub fn samples(records: &[DatasetRecord]) -> Vec<Sample<'_>> {
    records.iter().map(|r| r.sample()).collect()
}

/// A scorer trained on a mixed synthetic dataset.
pub fn trained_model(seed: u64) -> ScorerModel {
    let pairs = mixed_pairs(10, &[0.02, 0.05, 0.1, 0.2], 800, seed);
    let data = dataset(&pairs, seed);
    let (train, _) = split_dataset(&data, 0.8, seed).expect("split");
    dpcr::decision::train_scorer(&samples(&train), &TrainConfig { seed, ..Default::default() }).expect("training")
}

pub fn random_vec(rng: &mut ChaCha8Rng, r: f64) -> Vec3 {
    Vec3::new(rng.random_range(-r..r), rng.random_range(-r..r), rng.random_range(-r..r))
}
