//! Gaussian mixture fitting via expectation-maximization, and the negative
//! log probability density (NLPD) anomaly score.
//!
//! Covariances are stored as lower Cholesky factors: densities need only a
//! forward solve and the log-determinant falls out of the diagonal. The
//! M-step regularizes each covariance with `1e-6 * trace/d` on the diagonal
//! before factoring.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.8378770664093453;
/// Relative diagonal regularization added to every fitted covariance.
const COV_FLOOR_REL: f64 = 1e-6;
/// Responsibility mass below which a component counts as collapsed.
const MASS_FLOOR: f64 = 1e-10;

/// A fitted Gaussian mixture: weights on the simplex, means, and covariance
/// Cholesky factors (row-major lower triangles).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GmmModel {
    dim: usize,
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    chol: Vec<Vec<f64>>,
}

impl GmmModel {
    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    /// Lower Cholesky factor of component `j`'s covariance.
    pub fn cholesky_factor(&self, j: usize) -> &[f64] {
        &self.chol[j]
    }

    /// Reconstruct component `j`'s covariance matrix `L L^T`.
    pub fn covariance(&self, j: usize) -> Vec<f64> {
        let d = self.dim;
        let l = &self.chol[j];
        let mut cov = vec![0.0; d * d];
        for r in 0..d {
            for c in 0..=r {
                let mut sum = 0.0;
                for t in 0..=c.min(r) {
                    sum += l[r * d + t] * l[c * d + t];
                }
                cov[r * d + c] = sum;
                cov[c * d + r] = sum;
            }
        }
        cov
    }

    fn component_log_density(&self, j: usize, x: &[f64], scratch: &mut Vec<f64>) -> f64 {
        let d = self.dim;
        let l = &self.chol[j];
        scratch.clear();
        scratch.extend(x.iter().zip(&self.means[j]).map(|(a, b)| a - b));
        // Forward solve L z = (x - mu); the Mahalanobis term is ||z||^2.
        let mut log_det_half = 0.0;
        let mut maha = 0.0;
        for r in 0..d {
            let mut v = scratch[r];
            for c in 0..r {
                v -= l[r * d + c] * scratch[c];
            }
            let diag = l[r * d + r];
            let z = v / diag;
            scratch[r] = z;
            maha += z * z;
            log_det_half += diag.ln();
        }
        -0.5 * (d as f64) * LN_2PI - log_det_half - 0.5 * maha
    }

    /// Log mixture density at `x`, via log-sum-exp over components.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim, "feature dimension mismatch");
        let mut scratch = Vec::with_capacity(self.dim);
        let terms: Vec<f64> = (0..self.k())
            .map(|j| self.weights[j].ln() + self.component_log_density(j, x, &mut scratch))
            .collect();
        log_sum_exp(&terms)
    }

    /// Negative log probability density: the anomaly score.
    pub fn nlpd(&self, x: &[f64]) -> f64 {
        -self.log_density(x)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Parse(format!("GMM serialization failed: {e}")))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("bad GMM file: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceType {
    Full,
    Diagonal,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Stop when the relative log-likelihood change drops below this.
    pub tolerance: f64,
    pub covariance: CovarianceType,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 500,
            tolerance: 1e-8,
            covariance: CovarianceType::Full,
            seed: 0,
        }
    }
}

/// Fit result: the model plus the per-iteration log-likelihood trace
/// (non-decreasing, which tests assert).
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: GmmModel,
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Fit a `k`-component mixture by EM with k-means++-style seeding.
pub fn fit_gmm(data: &[Vec<f64>], k: usize, opts: &FitOptions) -> Result<FitOutcome> {
    if k == 0 {
        return Err(Error::InvalidConfig("component count must be >= 1".into()));
    }
    if data.len() < k {
        return Err(Error::InvalidConfig(format!(
            "need at least k={k} samples, got {}",
            data.len()
        )));
    }
    let d = data[0].len();
    if d == 0 || data.iter().any(|x| x.len() != d) {
        return Err(Error::DimensionMismatch {
            what: "feature vectors",
            expected: d.max(1),
            got: data.iter().map(|x| x.len()).find(|&l| l != d).unwrap_or(0),
        });
    }
    let n = data.len();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    // k-means++ seeding: first center uniform, then proportional to the
    // squared distance to the nearest chosen center.
    let mut means: Vec<Vec<f64>> = Vec::with_capacity(k);
    means.push(data[rng.gen_range(0..n)].clone());
    let mut dist2: Vec<f64> = data.iter().map(|x| sq_dist(x, &means[0])).collect();
    while means.len() < k {
        let total: f64 = dist2.iter().sum();
        let pick = if total > 0.0 {
            let mut t = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in dist2.iter().enumerate() {
                t -= w;
                if t < 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        means.push(data[pick].clone());
        for (i, x) in data.iter().enumerate() {
            dist2[i] = dist2[i].min(sq_dist(x, means.last().unwrap()));
        }
    }

    let global_cov = covariance_of(data, &mean_of(data), opts.covariance);
    let mut weights = vec![1.0 / k as f64; k];
    let mut chol: Vec<Vec<f64>> = Vec::with_capacity(k);
    for _ in 0..k {
        let factor =
            factor_with_floor(&global_cov, d).ok_or(Error::DegenerateComponent { component: 0 })?;
        chol.push(factor);
    }
    let mut model = GmmModel {
        dim: d,
        weights: weights.clone(),
        means,
        chol,
    };

    let mut trace: Vec<f64> = Vec::new();
    let mut responsibilities = vec![0.0f64; n * k];
    let mut reseeded = vec![false; k];
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..opts.max_iterations {
        iterations = iter + 1;
        // E-step.
        let mut ll = 0.0;
        let mut scratch = Vec::with_capacity(d);
        for (i, x) in data.iter().enumerate() {
            let row = &mut responsibilities[i * k..(i + 1) * k];
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = model.weights[j].ln() + model.component_log_density(j, x, &mut scratch);
            }
            let norm = log_sum_exp(row);
            ll += norm;
            for slot in row.iter_mut() {
                *slot = (*slot - norm).exp();
            }
        }
        trace.push(ll);
        if let [.., prev, last] = trace[..] {
            if (last - prev).abs() <= opts.tolerance * last.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        // M-step.
        for j in 0..k {
            let mass: f64 = (0..n).map(|i| responsibilities[i * k + j]).sum();
            // NaN mass counts as collapsed.
            let collapsed =
                mass.partial_cmp(&(MASS_FLOOR * n as f64)) != Some(std::cmp::Ordering::Greater);
            if collapsed {
                reseed_component(&mut model, j, data, &global_cov, &mut reseeded, &mut rng)?;
                continue;
            }
            weights[j] = mass / n as f64;
            let mut mu = vec![0.0; d];
            for (i, x) in data.iter().enumerate() {
                let w = responsibilities[i * k + j];
                for (t, &xv) in x.iter().enumerate() {
                    mu[t] += w * xv;
                }
            }
            for v in mu.iter_mut() {
                *v /= mass;
            }
            let mut cov = vec![0.0; d * d];
            match opts.covariance {
                CovarianceType::Full => {
                    for (i, x) in data.iter().enumerate() {
                        let w = responsibilities[i * k + j];
                        if w == 0.0 {
                            continue;
                        }
                        for r in 0..d {
                            let dr = x[r] - mu[r];
                            for c in 0..=r {
                                cov[r * d + c] += w * dr * (x[c] - mu[c]);
                            }
                        }
                    }
                    for r in 0..d {
                        for c in 0..r {
                            cov[r * d + c] /= mass;
                            cov[c * d + r] = cov[r * d + c];
                        }
                        cov[r * d + r] /= mass;
                    }
                }
                CovarianceType::Diagonal => {
                    for (i, x) in data.iter().enumerate() {
                        let w = responsibilities[i * k + j];
                        if w == 0.0 {
                            continue;
                        }
                        for r in 0..d {
                            let dr = x[r] - mu[r];
                            cov[r * d + r] += w * dr * dr;
                        }
                    }
                    for r in 0..d {
                        cov[r * d + r] /= mass;
                    }
                }
            }
            match factor_with_floor(&cov, d) {
                Some(factor) => {
                    model.weights[j] = weights[j];
                    model.means[j] = mu;
                    model.chol[j] = factor;
                }
                None => {
                    reseed_component(&mut model, j, data, &global_cov, &mut reseeded, &mut rng)?
                }
            }
        }
        // Renormalize weights (reseeding can perturb the simplex).
        let total: f64 = model.weights.iter().sum();
        model.weights.iter_mut().for_each(|w| *w /= total);
    }

    Ok(FitOutcome {
        model,
        log_likelihood: trace,
        iterations,
        converged,
    })
}

/// Pick the component count maximizing held-out log-likelihood; ties go to
/// the smaller candidate.
pub fn select_k(
    train: &[Vec<f64>],
    heldout: &[Vec<f64>],
    candidates: &[usize],
    opts: &FitOptions,
) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("no component-count candidates".into()));
    }
    let mut best: Option<(f64, usize)> = None;
    for &k in candidates {
        let fit = fit_gmm(train, k, opts)?;
        let score: f64 = heldout.iter().map(|x| fit.model.log_density(x)).sum();
        let better = match best {
            None => true,
            Some((bs, bk)) => score > bs || (score == bs && k < bk),
        };
        if better {
            best = Some((score, k));
        }
    }
    Ok(best.expect("non-empty candidates").1)
}

fn reseed_component(
    model: &mut GmmModel,
    j: usize,
    data: &[Vec<f64>],
    global_cov: &[f64],
    reseeded: &mut [bool],
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    if reseeded[j] {
        return Err(Error::DegenerateComponent { component: j });
    }
    reseeded[j] = true;
    let d = model.dim;
    model.means[j] = data[rng.gen_range(0..data.len())].clone();
    model.chol[j] =
        factor_with_floor(global_cov, d).ok_or(Error::DegenerateComponent { component: j })?;
    model.weights[j] = 1.0 / model.k() as f64;
    Ok(())
}

/// Add the relative trace floor to the diagonal and factor; `None` when the
/// matrix is not positive definite even after flooring.
fn factor_with_floor(cov: &[f64], d: usize) -> Option<Vec<f64>> {
    let trace: f64 = (0..d).map(|r| cov[r * d + r]).sum();
    let floor = COV_FLOOR_REL * trace / d as f64;
    let mut a = cov.to_vec();
    for r in 0..d {
        a[r * d + r] += floor;
    }
    cholesky_in_place(&mut a, d).then_some(a)
}

/// In-place lower Cholesky; returns false when a pivot is non-positive.
fn cholesky_in_place(a: &mut [f64], d: usize) -> bool {
    for r in 0..d {
        for c in 0..=r {
            let mut sum = a[r * d + c];
            for t in 0..c {
                sum -= a[r * d + t] * a[c * d + t];
            }
            if r == c {
                if sum <= 0.0 || !sum.is_finite() {
                    return false;
                }
                a[r * d + r] = sum.sqrt();
            } else {
                a[r * d + c] = sum / a[c * d + c];
            }
        }
        for c in r + 1..d {
            a[r * d + c] = 0.0;
        }
    }
    true
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn mean_of(data: &[Vec<f64>]) -> Vec<f64> {
    let d = data[0].len();
    let mut mu = vec![0.0; d];
    for x in data {
        for (t, &v) in x.iter().enumerate() {
            mu[t] += v;
        }
    }
    mu.iter_mut().for_each(|v| *v /= data.len() as f64);
    mu
}

fn covariance_of(data: &[Vec<f64>], mu: &[f64], kind: CovarianceType) -> Vec<f64> {
    let d = mu.len();
    let n = data.len() as f64;
    let mut cov = vec![0.0; d * d];
    for x in data {
        for r in 0..d {
            let dr = x[r] - mu[r];
            match kind {
                CovarianceType::Full => {
                    for c in 0..=r {
                        cov[r * d + c] += dr * (x[c] - mu[c]);
                    }
                }
                CovarianceType::Diagonal => cov[r * d + r] += dr * dr,
            }
        }
    }
    for r in 0..d {
        for c in 0..=r {
            cov[r * d + c] /= n;
            cov[c * d + r] = cov[r * d + c];
        }
    }
    if matches!(kind, CovarianceType::Diagonal) {
        for r in 0..d {
            for c in 0..d {
                if r != c {
                    cov[r * d + c] = 0.0;
                }
            }
        }
    }
    cov
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn gaussian_blob(
        rng: &mut ChaCha8Rng,
        center: &[f64],
        sigma: f64,
        count: usize,
    ) -> Vec<Vec<f64>> {
        let normal = Normal::new(0.0, sigma).unwrap();
        (0..count)
            .map(|_| center.iter().map(|&c| c + normal.sample(rng)).collect())
            .collect()
    }

    #[test]
    fn single_component_matches_sample_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data = gaussian_blob(&mut rng, &[2.0, -1.0, 0.5], 1.3, 400);
        let fit = fit_gmm(&data, 1, &FitOptions::default()).unwrap();
        let mu = mean_of(&data);
        let cov = covariance_of(&data, &mu, CovarianceType::Full);
        let d = 3;
        for t in 0..d {
            assert!((fit.model.means()[0][t] - mu[t]).abs() < 1e-8);
        }
        let refit_cov = fit.model.covariance(0);
        let trace: f64 = (0..d).map(|r| cov[r * d + r]).sum();
        let floor = COV_FLOOR_REL * trace / d as f64;
        for r in 0..d {
            for c in 0..d {
                let expected = cov[r * d + c] + if r == c { floor } else { 0.0 };
                assert!(
                    (refit_cov[r * d + c] - expected).abs() < 1e-8,
                    "cov[{r}][{c}]"
                );
            }
        }
    }

    #[test]
    fn two_separated_clusters_are_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut data = gaussian_blob(&mut rng, &[0.0, 0.0], 0.5, 5000);
        data.extend(gaussian_blob(&mut rng, &[6.0, 6.0], 0.5, 5000));
        let fit = fit_gmm(&data, 2, &FitOptions::default()).unwrap();
        let mut means: Vec<&Vec<f64>> = fit.model.means().iter().collect();
        means.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        assert!((means[0][0]).abs() < 0.1 && (means[0][1]).abs() < 0.1);
        assert!((means[1][0] - 6.0).abs() < 0.1 && (means[1][1] - 6.0).abs() < 0.1);
        for w in fit.model.weights() {
            assert!((w - 0.5).abs() < 0.05);
        }
    }

    #[test]
    fn log_likelihood_is_monotone_non_decreasing() {
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut data = gaussian_blob(&mut rng, &[0.0, 0.0, 0.0], 1.0, 150);
            data.extend(gaussian_blob(&mut rng, &[2.5, -1.0, 1.0], 0.7, 100));
            let fit = fit_gmm(
                &data,
                3,
                &FitOptions {
                    seed,
                    ..FitOptions::default()
                },
            )
            .unwrap();
            for w in fit.log_likelihood.windows(2) {
                assert!(
                    w[1] >= w[0] - 1e-8 * (1.0 + w[0].abs()),
                    "seed {seed}: ll dropped {} -> {}",
                    w[0],
                    w[1]
                );
            }
            let total: f64 = fit.model.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn nlpd_at_the_mean_has_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = gaussian_blob(&mut rng, &[1.0, 2.0], 0.8, 500);
        let fit = fit_gmm(&data, 1, &FitOptions::default()).unwrap();
        let model = &fit.model;
        let mu = model.means()[0].clone();
        let d = 2.0;
        let l = model.cholesky_factor(0);
        let log_det: f64 = (0..2).map(|r| l[r * 2 + r].ln()).sum::<f64>() * 2.0;
        let expected = 0.5 * d * LN_2PI + 0.5 * log_det;
        assert!((model.nlpd(&mu) - expected).abs() < 1e-10);
    }

    #[test]
    fn nlpd_grows_along_rays_for_spherical_single_component() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data = gaussian_blob(&mut rng, &[0.0, 0.0, 0.0, 0.0], 1.0, 4000);
        let fit = fit_gmm(&data, 1, &FitOptions::default()).unwrap();
        let model = &fit.model;
        let mu = model.means()[0].clone();
        let dir = [0.3, -0.5, 0.8, 0.1];
        let mut last = model.nlpd(&mu);
        for step in 1..10 {
            let x: Vec<f64> = mu
                .iter()
                .zip(dir.iter())
                .map(|(m, d)| m + d * step as f64)
                .collect();
            let score = model.nlpd(&x);
            assert!(score > last);
            last = score;
        }
    }

    #[test]
    fn mixture_density_matches_naive_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut data = gaussian_blob(&mut rng, &[0.0, 0.0], 1.0, 300);
        data.extend(gaussian_blob(&mut rng, &[4.0, 1.0], 0.6, 200));
        let fit = fit_gmm(&data, 2, &FitOptions::default()).unwrap();
        let model = &fit.model;
        let mut scratch = Vec::new();
        for probe in &data[..40] {
            let naive: f64 = (0..model.k())
                .map(|j| {
                    model.weights()[j] * model.component_log_density(j, probe, &mut scratch).exp()
                })
                .sum();
            assert!((model.nlpd(probe) - (-naive.ln())).abs() < 1e-10);
        }
    }

    #[test]
    fn select_k_prefers_single_gaussian_for_single_blob() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let train = gaussian_blob(&mut rng, &[0.0, 0.0], 1.0, 800);
        let heldout = gaussian_blob(&mut rng, &[0.0, 0.0], 1.0, 400);
        let k = select_k(&train, &heldout, &[1, 2, 3], &FitOptions::default()).unwrap();
        assert_eq!(k, 1);
        assert_eq!(
            select_k(&train, &heldout, &[4], &FitOptions::default()).unwrap(),
            4
        );
    }

    #[test]
    fn fit_is_deterministic_per_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let data = gaussian_blob(&mut rng, &[1.0, 1.0], 1.0, 300);
        let opts = FitOptions {
            seed: 42,
            ..FitOptions::default()
        };
        let a = fit_gmm(&data, 2, &opts).unwrap();
        let b = fit_gmm(&data, 2, &opts).unwrap();
        assert_eq!(a.log_likelihood, b.log_likelihood);
        assert_eq!(a.model.means(), b.model.means());
    }

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let data = gaussian_blob(&mut rng, &[0.0, 3.0], 1.0, 200);
        let fit = fit_gmm(&data, 2, &FitOptions::default()).unwrap();
        let text = serde_json::to_string(&fit.model).unwrap();
        let restored: GmmModel = serde_json::from_str(&text).unwrap();
        let probe = vec![0.5, 2.0];
        assert!((restored.nlpd(&probe) - fit.model.nlpd(&probe)).abs() < 1e-14);
    }
}
