//! Box-constrained LASSO via monotone accelerated proximal gradient descent.
//!
//! Minimizes `||y - scale*M x||^2 + lambda * sum(x)` over `x` in `[0,1]^n`.
//! The step size is `1/L` with `L` estimated by power iteration on `M^T M`;
//! a monotone safeguard rejects accelerated steps that would increase the
//! objective and restarts the momentum, so the reported objective sequence is
//! non-increasing.

use crate::error::Result;
use crate::matrix::PoolingMatrix;
use crate::oracle::{CountVector, LabelVector};

use super::{lasso_objective, DecoderConfig};

/// Relaxed solution plus the thresholded verdicts.
#[derive(Debug, Clone)]
pub struct ClassoSolution {
    /// Box-constrained minimizer estimate, entries in `[0,1]`.
    pub relaxed: Vec<f64>,
    /// `relaxed[i] > tau` thresholding of the relaxed solution.
    pub verdicts: LabelVector,
    pub objective: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit before the tolerance.
    pub converged: bool,
}

/// Largest squared singular value of the pooling matrix, estimated by power
/// iteration with a small safety factor. Callers decoding many chunks against
/// one matrix should compute this once and use [`classo_decode_with_lipschitz`].
pub fn gram_spectral_bound(matrix: &PoolingMatrix) -> f64 {
    let n = matrix.n();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut rayleigh = 0.0f64;
    for _ in 0..300 {
        // w = M^T (M v)
        let mv = super::pool_sums(matrix, &v);
        let mut w = vec![0.0; n];
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = matrix.item_pools(i).iter().map(|&q| mv[q as usize]).sum();
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 1.0;
        }
        let next = norm;
        w.iter_mut().for_each(|x| *x /= norm);
        let done = (next - rayleigh).abs() <= 1e-12 * next.max(1.0);
        rayleigh = next;
        v = w;
        if done {
            break;
        }
    }
    // Both a safety factor for the power-iteration underestimate and a hard
    // cap from ||M||_1 * ||M||_inf = c*r.
    (rayleigh * 1.02).min((matrix.c() * matrix.r()) as f64)
}

/// Decode quantitative pool counts by box-constrained LASSO.
pub fn classo_decode(
    matrix: &PoolingMatrix,
    y: &CountVector,
    cfg: &DecoderConfig,
) -> Result<ClassoSolution> {
    let l = gram_spectral_bound(matrix);
    classo_decode_with_lipschitz(matrix, y, cfg, l)
}

/// Same as [`classo_decode`] with the spectral bound supplied by the caller.
pub fn classo_decode_with_lipschitz(
    matrix: &PoolingMatrix,
    y: &CountVector,
    cfg: &DecoderConfig,
    gram_bound: f64,
) -> Result<ClassoSolution> {
    cfg.validate()?;
    super::check_outcome_len(matrix, y.len())?;
    let yf: Vec<f64> = y.as_slice().iter().map(|&v| v as f64).collect();
    let mut x = vec![0.0; matrix.n()];
    let (objective, iterations, converged) = box_lasso(
        matrix,
        &yf,
        1.0,
        cfg.lambda,
        &mut x,
        None,
        cfg.max_iterations,
        cfg.tolerance,
        2.0 * gram_bound,
    );
    let mut verdicts = LabelVector::zeros(matrix.n());
    for (i, &v) in x.iter().enumerate() {
        if v > cfg.tau {
            verdicts.set(i, 1);
        }
    }
    Ok(ClassoSolution {
        relaxed: x,
        verdicts,
        objective,
        iterations,
        converged,
    })
}

/// Monotone accelerated projected proximal gradient over the `[0,1]` box.
///
/// `fixed` optionally pins coordinates (`0`/`1` fixed, `-1` free), which the
/// branch-and-bound decoder uses for node relaxations. `x` carries the warm
/// start in and the solution out. Returns `(objective, iterations, converged)`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn box_lasso(
    matrix: &PoolingMatrix,
    y: &[f64],
    scale: f64,
    lambda: f64,
    x: &mut [f64],
    fixed: Option<&[i8]>,
    max_iterations: usize,
    tolerance: f64,
    lipschitz: f64,
) -> (f64, usize, bool) {
    let n = matrix.n();
    let m = matrix.m();
    let step = 1.0 / lipschitz.max(f64::MIN_POSITIVE);
    let is_free = |i: usize| fixed.is_none_or(|f| f[i] < 0);
    // Pin fixed coordinates up front.
    if let Some(f) = fixed {
        for i in 0..n {
            if f[i] >= 0 {
                x[i] = f[i] as f64;
            }
        }
    }
    let mut obj = lasso_objective(matrix, y, scale, x, lambda);
    let mut momentum = x.to_vec();
    let mut t = 1.0f64;
    let mut residual = vec![0.0; m];
    let mut candidate = vec![0.0; n];
    for iter in 1..=max_iterations {
        // Gradient of the smooth part at the momentum point.
        for q in 0..m {
            let sum: f64 = matrix
                .pool_items(q)
                .iter()
                .map(|&i| momentum[i as usize])
                .sum();
            residual[q] = y[q] - scale * sum;
        }
        for i in 0..n {
            if !is_free(i) {
                candidate[i] = x[i];
                continue;
            }
            let grad = -2.0
                * scale
                * matrix
                    .item_pools(i)
                    .iter()
                    .map(|&q| residual[q as usize])
                    .sum::<f64>();
            // Prox of lambda*x over [0,1]: shift and clamp.
            candidate[i] = (momentum[i] - step * (grad + lambda)).clamp(0.0, 1.0);
        }
        let cand_obj = lasso_objective(matrix, y, scale, &candidate, lambda);
        if cand_obj <= obj {
            let improvement = obj - cand_obj;
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            // Accepted point is the candidate; extrapolate against the point
            // it replaces (x still holds the previous accepted iterate here).
            for i in 0..n {
                momentum[i] = if is_free(i) {
                    candidate[i] + ((t - 1.0) / t_next) * (candidate[i] - x[i])
                } else {
                    x[i]
                };
            }
            t = t_next;
            x.copy_from_slice(&candidate);
            obj = cand_obj;
            if improvement <= tolerance * obj.abs().max(1.0) {
                return (obj, iter, true);
            }
        } else {
            // Accelerated step overshot: restart momentum from the incumbent.
            // A plain projected-gradient step from x either improves the
            // objective next round or certifies (near-)optimality.
            let restarted = momentum.iter().zip(x.iter()).all(|(a, b)| a == b);
            momentum.copy_from_slice(x);
            t = 1.0;
            if restarted {
                // Plain step from x failed to improve: fixed point reached.
                return (obj, iter, true);
            }
        }
    }
    (obj, max_iterations, false)
}
