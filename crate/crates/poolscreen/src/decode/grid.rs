//! Hyperparameter grid search maximizing sensitivity x specificity on a
//! validation population.

use rayon::prelude::*;

use crate::error::Result;
use crate::matrix::PoolingMatrix;
use crate::metrics::ConfusionCounts;
use crate::oracle::{CountVector, LabelVector};

use super::{classo_decode_with_lipschitz, mip_decode, DecoderConfig};
use crate::decode::classo::gram_spectral_bound;

/// Default regularization grid.
pub const DEFAULT_LAMBDA_GRID: [f64; 7] = [0.001, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0];
/// Default threshold grid, 0.1 through 0.9.
pub const DEFAULT_TAU_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Which quantitative decoder the grid search tunes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridDecoder {
    /// Tunes lambda only.
    Mip,
    /// Tunes lambda and the threshold tau.
    Classo,
}

/// Pick the configuration maximizing sensitivity x specificity over the
/// validation chunks (ground truth paired with observed counts). Undefined
/// rates on degenerate validation data count as 1.0 so such draws do not
/// discard configurations. Ties break toward larger lambda, then larger tau,
/// making the outcome independent of evaluation order.
pub fn grid_search(
    matrix: &PoolingMatrix,
    validation: &[(LabelVector, CountVector)],
    decoder: GridDecoder,
    lambda_grid: &[f64],
    tau_grid: &[f64],
    base: &DecoderConfig,
) -> Result<DecoderConfig> {
    if lambda_grid.is_empty() {
        return Err(crate::error::Error::InvalidConfig(
            "lambda grid is empty".into(),
        ));
    }
    if matches!(decoder, GridDecoder::Classo) && tau_grid.is_empty() {
        return Err(crate::error::Error::InvalidConfig(
            "tau grid is empty".into(),
        ));
    }
    let gram = gram_spectral_bound(matrix);
    let points: Vec<(f64, f64)> = match decoder {
        GridDecoder::Mip => lambda_grid.iter().map(|&l| (l, base.tau)).collect(),
        GridDecoder::Classo => lambda_grid
            .iter()
            .flat_map(|&l| tau_grid.iter().map(move |&t| (l, t)))
            .collect(),
    };
    let scored: Vec<(f64, f64, f64)> = points
        .par_iter()
        .map(|&(lambda, tau)| {
            let cfg = DecoderConfig {
                lambda,
                tau,
                ..*base
            };
            let mut counts = ConfusionCounts::default();
            for (truth, y) in validation {
                let verdicts = match decoder {
                    GridDecoder::Mip => mip_decode(matrix, y, &cfg)?.verdicts,
                    GridDecoder::Classo => {
                        classo_decode_with_lipschitz(matrix, y, &cfg, gram)?.verdicts
                    }
                };
                counts.accumulate(truth, &verdicts)?;
            }
            let sensitivity = counts.sensitivity().unwrap_or(1.0);
            let specificity = counts.specificity().unwrap_or(1.0);
            Ok((sensitivity * specificity, lambda, tau))
        })
        .collect::<Result<_>>()?;
    let (_, lambda, tau) = scored
        .into_iter()
        .reduce(|a, b| if b > a { b } else { a })
        .expect("non-empty grid");
    Ok(DecoderConfig {
        lambda,
        tau,
        ..*base
    })
}
