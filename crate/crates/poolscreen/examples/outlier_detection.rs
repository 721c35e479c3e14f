//! Pooled outlier detection end to end: fit a Gaussian mixture to clean pool
//! features, calibrate the anomaly-score histogram, then decode pooled
//! screens and run the two-round variant.
//!
//! ```bash
//! cargo run --release --example outlier_detection
//! ```

use poolscreen::decode::DecoderConfig;
use poolscreen::features::{FeatureGenerator, SyntheticFeatureConfig};
use poolscreen::gmm::{fit_gmm, select_k, FitOptions};
use poolscreen::histogram::build_histogram;
use poolscreen::matrix::PoolingMatrix;
use poolscreen::metrics::ConfusionCounts;
use poolscreen::od::{dorfman_od_pipeline, pooled_od_pipeline, PoolDecoder};
use poolscreen::oracle::{exact_counts, sample_population, SamplingMode};

fn main() {
    let feature_cfg = SyntheticFeatureConfig {
        seed: 42,
        ..SyntheticFeatureConfig::default()
    };
    let t = feature_cfg.max_count;
    let mut gen = FeatureGenerator::new(feature_cfg.clone()).unwrap();

    // Fit the clean-pool mixture; pick K by held-out likelihood.
    let train: Vec<Vec<f64>> = (0..3000).map(|_| gen.pool_feature(0)).collect();
    let heldout: Vec<Vec<f64>> = (0..800).map(|_| gen.pool_feature(0)).collect();
    let opts = FitOptions {
        seed: 42,
        ..FitOptions::default()
    };
    let k = select_k(&train, &heldout, &[1, 2, 3, 4], &opts).unwrap();
    let gmm = fit_gmm(&train, k, &opts).unwrap().model;
    println!("pool-score mixture: K = {k} chosen by held-out likelihood");

    // Calibrate the score histogram on pools with known outlier counts.
    let mut calib = Vec::new();
    for label in 0..=t {
        for _ in 0..1500 {
            calib.push((gmm.nlpd(&gen.pool_feature(label)), label));
        }
    }
    let hist = build_histogram(&calib, 500, t).unwrap();
    let (s_min, s_max) = hist.score_range();
    println!("histogram: 500 bins over NLPD range [{s_min:.2}, {s_max:.2}], labels 0..={t}");

    // Screen chunks of 100 items through the pooling matrix.
    let matrix = PoolingMatrix::construct_balanced(100, 50, 8, 4, 0).unwrap();
    let decoder = PoolDecoder::Classo(DecoderConfig {
        lambda: 0.1,
        ..DecoderConfig::default()
    });
    let mut counts = ConfusionCounts::default();
    for seed in 0..100u64 {
        let pop = sample_population(100, 0.02, SamplingMode::Binomial, seed).unwrap();
        let pool_counts = exact_counts(&matrix, pop.labels()).unwrap();
        let features: Vec<Vec<f64>> = pool_counts
            .as_slice()
            .iter()
            .map(|&g| gen.pool_feature((g as usize).min(t)))
            .collect();
        let verdicts = pooled_od_pipeline(&matrix, &features, &gmm, &hist, &decoder).unwrap();
        counts.accumulate(pop.labels(), &verdicts).unwrap();
    }
    println!(
        "pooled OD via CLasso over 100 chunks at p=0.02: sensitivity {:.4}, specificity {:.4}",
        counts.sensitivity().unwrap(),
        counts.specificity().unwrap()
    );

    // Two-round variant on single pools of 8: clean pools cost no item tests.
    let mut item_gen = FeatureGenerator::new(SyntheticFeatureConfig {
        seed: 77,
        ..feature_cfg
    })
    .unwrap();
    let item_train: Vec<Vec<f64>> = (0..2000).map(|_| item_gen.item_feature(false)).collect();
    let item_gmm = fit_gmm(&item_train, 2, &opts).unwrap().model;
    let mut item_calib = Vec::new();
    for label in 0..=1usize {
        for _ in 0..1500 {
            item_calib.push((item_gmm.nlpd(&item_gen.item_feature(label == 1)), label));
        }
    }
    let item_hist = build_histogram(&item_calib, 500, 1).unwrap();
    let mut item_tests = 0usize;
    let mut pools_with_outliers = 0usize;
    for trial in 0..200usize {
        let outliers = usize::from(trial % 5 == 0); // 20% of pools carry one outlier
        pools_with_outliers += outliers;
        let pool_feature = gen.pool_feature(outliers);
        let item_features: Vec<Vec<f64>> = (0..8)
            .map(|i| item_gen.item_feature(i < outliers))
            .collect();
        let outcome = dorfman_od_pipeline(
            &pool_feature,
            &item_features,
            &gmm,
            &hist,
            &item_gmm,
            &item_hist,
        );
        item_tests += outcome.item_tests;
    }
    println!(
        "two-round OD: {pools_with_outliers}/200 pools carried an outlier; {item_tests} item evaluations spent (vs {} for exhaustive retesting)",
        200 * 8
    );
}
