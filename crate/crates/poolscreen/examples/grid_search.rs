//! Hyperparameter selection: pick lambda and tau maximizing
//! sensitivity x specificity on a validation population drawn at the same
//! prevalence as the target run.
//!
//! ```bash
//! cargo run --release --example grid_search
//! ```

use poolscreen::decode::{
    grid_search, DecoderConfig, GridDecoder, DEFAULT_LAMBDA_GRID, DEFAULT_TAU_GRID,
};
use poolscreen::matrix::PoolingMatrix;
use poolscreen::oracle::{noisy_counts, sample_population, ConfusionModel, SamplingMode};

fn main() {
    let matrix = PoolingMatrix::construct_balanced(100, 50, 8, 4, 0).unwrap();
    let prevalence = 0.03;

    // Validation chunks: ground truth paired with noisy counts.
    let validation: Vec<_> = (0..40u64)
        .map(|i| {
            let pop = sample_population(100, prevalence, SamplingMode::Binomial, 500 + i).unwrap();
            let cm = ConfusionModel::tridiagonal(8, 0.9, 900 + i).unwrap();
            let y = noisy_counts(&matrix, pop.labels(), &cm).unwrap();
            (pop.labels().clone(), y)
        })
        .collect();

    let base = DecoderConfig::default();
    println!(
        "searching {} lambda values x {} tau values on {} validation chunks at p = {prevalence}",
        DEFAULT_LAMBDA_GRID.len(),
        DEFAULT_TAU_GRID.len(),
        validation.len()
    );
    let chosen = grid_search(
        &matrix,
        &validation,
        GridDecoder::Classo,
        &DEFAULT_LAMBDA_GRID,
        &DEFAULT_TAU_GRID,
        &base,
    )
    .unwrap();
    println!("CLasso: lambda = {}, tau = {}", chosen.lambda, chosen.tau);

    let chosen_mip = grid_search(
        &matrix,
        &validation,
        GridDecoder::Mip,
        &DEFAULT_LAMBDA_GRID,
        &[],
        &base,
    )
    .unwrap();
    println!("MIP:    lambda = {}", chosen_mip.lambda);
    println!(
        "(ties break toward larger lambda, then larger tau, so the pick is order-independent)"
    );
}
