//! Decoders that recover per-item verdicts from pool observations.
//!
//! Binary group-testing decoders ([`gt`]) consume thresholded pool outcomes;
//! the quantitative decoders ([`mip`], [`classo`]) minimize the penalized
//! least-squares objective `||y - Mx||^2 + lambda * ||x||_1` over binary or
//! box-constrained vectors.

pub mod classo;
pub mod grid;
pub mod gt;
pub mod mip;

pub use classo::{classo_decode, classo_decode_with_lipschitz, ClassoSolution};
pub use grid::{grid_search, GridDecoder, DEFAULT_LAMBDA_GRID, DEFAULT_TAU_GRID};
pub use gt::{comp_decode, dorfman_decode, ncomp_decode, optimal_dorfman_pool_size, DorfmanPlan};
pub use mip::{mip_decode, MipSolution};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::PoolingMatrix;

/// Hyperparameters and solver caps shared by the quantitative decoders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecoderConfig {
    /// l1 regularization weight.
    pub lambda: f64,
    /// Threshold applied to the relaxed solution (CLasso only).
    pub tau: f64,
    /// Branch-and-bound node budget.
    pub max_nodes: u64,
    /// Iteration cap for the proximal-gradient solver.
    pub max_iterations: usize,
    /// Relative objective-change stopping tolerance.
    pub tolerance: f64,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            lambda: 0.05,
            tau: 0.5,
            max_nodes: 500_000,
            max_iterations: 10_000,
            tolerance: 1e-10,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be a nonnegative finite number, got {}",
                self.lambda
            )));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::InvalidConfig(format!(
                "tau must lie in [0,1], got {}",
                self.tau
            )));
        }
        if self.max_iterations == 0 || self.max_nodes == 0 {
            return Err(Error::InvalidConfig(
                "solver budgets must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }
}

/// `(M x)_q` for every pool, using the sparse row lists.
pub(crate) fn pool_sums(matrix: &PoolingMatrix, x: &[f64]) -> Vec<f64> {
    (0..matrix.m())
        .map(|q| matrix.pool_items(q).iter().map(|&i| x[i as usize]).sum())
        .collect()
}

/// The decoding objective `||y - scale*M x||^2 + lambda * sum(x)`.
///
/// With integer `y`, unit scale, and binary `x` every term is an exactly
/// representable integer, so the value is bit-stable regardless of which code
/// path computes it.
pub(crate) fn lasso_objective(
    matrix: &PoolingMatrix,
    y: &[f64],
    scale: f64,
    x: &[f64],
    lambda: f64,
) -> f64 {
    let mut residual = 0.0;
    for q in 0..matrix.m() {
        let sum: f64 = matrix.pool_items(q).iter().map(|&i| x[i as usize]).sum();
        let diff = y[q] - scale * sum;
        residual += diff * diff;
    }
    residual + lambda * x.iter().sum::<f64>()
}

pub(crate) fn check_outcome_len(matrix: &PoolingMatrix, len: usize) -> Result<()> {
    if len != matrix.m() {
        return Err(Error::DimensionMismatch {
            what: "pool outcome vector",
            expected: matrix.m(),
            got: len,
        });
    }
    Ok(())
}
