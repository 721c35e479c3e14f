//! Pooled outlier detection: anomaly scores on pool features become pool
//! counts via the score histogram, then any pooled decoder recovers
//! per-item verdicts.

use crate::decode::{classo_decode, comp_decode, mip_decode, ncomp_decode, DecoderConfig};
use crate::error::Result;
use crate::gmm::GmmModel;
use crate::histogram::ScoreHistogram;
use crate::matrix::PoolingMatrix;
use crate::oracle::{CountVector, LabelVector};

/// Decoder selection for the non-adaptive pooled pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PoolDecoder {
    Comp,
    Ncomp { t: usize },
    Mip(DecoderConfig),
    Classo(DecoderConfig),
}

impl PoolDecoder {
    fn is_binary(&self) -> bool {
        matches!(self, PoolDecoder::Comp | PoolDecoder::Ncomp { .. })
    }
}

/// Score every pool feature under the mixture, translate scores to predicted
/// outlier counts through the histogram, and decode.
///
/// Binary decoders consume the binarized counts; quantitative decoders take
/// them as-is.
pub fn pooled_od_pipeline(
    matrix: &PoolingMatrix,
    pool_features: &[Vec<f64>],
    gmm: &GmmModel,
    hist: &ScoreHistogram,
    decoder: &PoolDecoder,
) -> Result<LabelVector> {
    let counts = predict_pool_counts(matrix, pool_features, gmm, hist)?;
    if decoder.is_binary() {
        let outcomes = counts.binarize();
        match decoder {
            PoolDecoder::Comp => comp_decode(matrix, &outcomes),
            PoolDecoder::Ncomp { t } => ncomp_decode(matrix, &outcomes, *t),
            _ => unreachable!(),
        }
    } else {
        match decoder {
            PoolDecoder::Mip(cfg) => Ok(mip_decode(matrix, &counts, cfg)?.verdicts),
            PoolDecoder::Classo(cfg) => Ok(classo_decode(matrix, &counts, cfg)?.verdicts),
            _ => unreachable!(),
        }
    }
}

/// Predicted outlier count per pool: `label_pool(nlpd(feature))`.
pub fn predict_pool_counts(
    matrix: &PoolingMatrix,
    pool_features: &[Vec<f64>],
    gmm: &GmmModel,
    hist: &ScoreHistogram,
) -> Result<CountVector> {
    crate::decode::check_outcome_len(matrix, pool_features.len())?;
    let counts = pool_features
        .iter()
        .map(|phi| hist.label_pool(gmm.nlpd(phi)) as u32)
        .collect();
    Ok(CountVector::new(counts))
}

/// Result of the two-round outlier-detection pipeline on one pool.
#[derive(Debug, Clone)]
pub struct DorfmanOdOutcome {
    pub verdicts: LabelVector,
    /// Individual evaluations spent (0 when the pool scored clean, otherwise
    /// the pool size).
    pub item_tests: usize,
}

/// Two-round outlier detection for a single pool of `r` items.
///
/// The pool's feature vector is scored under `(pool_gmm, pool_hist)`; a
/// predicted count of zero clears every item without individual tests.
/// Otherwise each item's feature is scored under `(item_gmm, item_hist)`,
/// whose histogram carries binary labels.
pub fn dorfman_od_pipeline(
    pool_feature: &[f64],
    item_features: &[Vec<f64>],
    pool_gmm: &GmmModel,
    pool_hist: &ScoreHistogram,
    item_gmm: &GmmModel,
    item_hist: &ScoreHistogram,
) -> DorfmanOdOutcome {
    let r = item_features.len();
    let pool_label = pool_hist.label_pool(pool_gmm.nlpd(pool_feature));
    if pool_label == 0 {
        return DorfmanOdOutcome {
            verdicts: LabelVector::zeros(r),
            item_tests: 0,
        };
    }
    let mut verdicts = LabelVector::zeros(r);
    for (i, phi) in item_features.iter().enumerate() {
        if item_hist.label_pool(item_gmm.nlpd(phi)) > 0 {
            verdicts.set(i, 1);
        }
    }
    DorfmanOdOutcome {
        verdicts,
        item_tests: r,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureGenerator, SyntheticFeatureConfig};
    use crate::gmm::{fit_gmm, FitOptions};
    use crate::histogram::build_histogram;
    use crate::oracle::exact_counts;

    /// Calibrated scorer over widely separated synthetic clusters.
    fn calibrated(
        separation: f64,
        dim: usize,
        max_count: usize,
        seed: u64,
    ) -> (GmmModel, ScoreHistogram, FeatureGenerator) {
        let cfg = SyntheticFeatureConfig {
            dim,
            separation,
            max_count,
            seed,
            ..Default::default()
        };
        let mut gen = FeatureGenerator::new(cfg).unwrap();
        let clean: Vec<Vec<f64>> = (0..600).map(|_| gen.pool_feature(0)).collect();
        let gmm = fit_gmm(
            &clean,
            2,
            &FitOptions {
                seed,
                ..Default::default()
            },
        )
        .unwrap()
        .model;
        let mut calib = Vec::new();
        for count in 0..=max_count {
            for _ in 0..400 {
                calib.push((gmm.nlpd(&gen.pool_feature(count)), count));
            }
        }
        let hist = build_histogram(&calib, 250, max_count).unwrap();
        (gmm, hist, gen)
    }

    #[test]
    fn separable_features_reproduce_exact_counts() {
        let m = PoolingMatrix::construct_balanced(100, 50, 8, 4, 0).unwrap();
        let (gmm, hist, mut gen) = calibrated(60.0, 16, 5, 7);
        let truth = LabelVector::from_support(100, &[4, 18, 77]);
        let exact = exact_counts(&m, &truth).unwrap();
        let features: Vec<Vec<f64>> = exact
            .as_slice()
            .iter()
            .map(|&count| gen.pool_feature(count as usize))
            .collect();
        let predicted = predict_pool_counts(&m, &features, &gmm, &hist).unwrap();
        assert_eq!(predicted, exact);
        // And through the full pipeline every decoder reproduces the truth.
        for decoder in [
            PoolDecoder::Comp,
            PoolDecoder::Ncomp { t: 2 },
            PoolDecoder::Mip(DecoderConfig::default().with_lambda(0.01)),
            PoolDecoder::Classo(DecoderConfig::default().with_lambda(0.01)),
        ] {
            let verdicts = pooled_od_pipeline(&m, &features, &gmm, &hist, &decoder).unwrap();
            assert_eq!(verdicts, truth, "{decoder:?}");
        }
    }

    #[test]
    fn all_low_scores_decode_to_all_clear() {
        let m = PoolingMatrix::construct_balanced(20, 15, 4, 3, 1).unwrap();
        let (gmm, hist, mut gen) = calibrated(60.0, 8, 3, 3);
        let features: Vec<Vec<f64>> = (0..15).map(|_| gen.pool_feature(0)).collect();
        for decoder in [
            PoolDecoder::Comp,
            PoolDecoder::Mip(DecoderConfig::default()),
            PoolDecoder::Classo(DecoderConfig::default()),
        ] {
            let verdicts = pooled_od_pipeline(&m, &features, &gmm, &hist, &decoder).unwrap();
            assert_eq!(verdicts.count_positives(), 0);
        }
    }

    #[test]
    fn dorfman_od_skips_items_for_clean_pools() {
        let (pool_gmm, pool_hist, mut gen) = calibrated(60.0, 8, 5, 11);
        let (item_gmm, item_hist, mut item_gen) = calibrated(60.0, 8, 1, 13);
        let clean_pool = gen.pool_feature(0);
        let outcome = dorfman_od_pipeline(
            &clean_pool,
            &(0..8)
                .map(|_| item_gen.item_feature(false))
                .collect::<Vec<_>>(),
            &pool_gmm,
            &pool_hist,
            &item_gmm,
            &item_hist,
        );
        assert_eq!(outcome.item_tests, 0);
        assert_eq!(outcome.verdicts.count_positives(), 0);

        // A pool with two outliers pays exactly r item tests and finds them.
        let hot_pool = gen.pool_feature(2);
        let items: Vec<Vec<f64>> = (0..8).map(|i| item_gen.item_feature(i < 2)).collect();
        let outcome = dorfman_od_pipeline(
            &hot_pool, &items, &pool_gmm, &pool_hist, &item_gmm, &item_hist,
        );
        assert_eq!(outcome.item_tests, 8);
        assert_eq!(outcome.verdicts.support(), vec![0, 1]);
    }
}
