//! Analytic per-item computational cost model, in units of one full
//! individual inference pass.
//!
//! A pooled pass splits into a per-item early stage (fraction `alpha` of a
//! full pass, run once per item) and a late stage (the remaining `1 - alpha`,
//! run once per pool), so non-adaptive pooling with `m` pools over `n` items
//! costs `alpha + (1-alpha) * m/n` per item. Two-round testing adds a full
//! individual pass for every item whose group is flagged.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::ConfusionModel;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct CostModel {
    /// Fraction of a full pass spent in the shared early stage.
    pub alpha: f64,
    /// Relative cost of one mixture-scoring pass; reported separately for
    /// outlier-detection runs and small enough to be negligible.
    pub od_score_cost: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            alpha: 0.22,
            od_score_cost: 1e-4,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!(
                "alpha = {} outside [0,1]",
                self.alpha
            )));
        }
        if self.od_score_cost < 0.0 {
            return Err(Error::InvalidConfig(
                "od_score_cost must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Per-item cost of non-adaptive pooled screening with `m` pools over `n` items.
    pub fn nonadaptive(&self, m: usize, n: usize) -> f64 {
        self.alpha + (1.0 - self.alpha) * m as f64 / n as f64
    }

    /// Per-item cost of individual screening.
    pub fn individual(&self) -> f64 {
        1.0
    }

    /// Per-item two-round cost given the observed fraction of items that
    /// needed an individual retest.
    pub fn dorfman_observed(&self, group_size: usize, retest_fraction: f64) -> f64 {
        self.alpha + (1.0 - self.alpha) / group_size as f64 + retest_fraction
    }

    /// Modeled two-round cost at prevalence `p`: group counts are binomial
    /// and a group is flagged when its noisy count report is nonzero.
    pub fn dorfman_modeled(&self, group_size: usize, p: f64, cm: &ConfusionModel) -> f64 {
        let g = group_size;
        let max_row = cm.size() - 1;
        let mut flagged = 0.0;
        for k in 0..=g {
            let prob_k = binomial_pmf(g, k, p);
            let miss = cm.prob(k.min(max_row), 0);
            flagged += prob_k * (1.0 - miss);
        }
        self.dorfman_observed(g, flagged)
    }
}

fn binomial_pmf(n: usize, k: usize, p: f64) -> f64 {
    let mut log_c = 0.0;
    for i in 0..k {
        log_c += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    let log_p = if k == 0 { 0.0 } else { p.ln() * k as f64 };
    let log_q = if n == k {
        0.0
    } else {
        (1.0 - p).ln() * (n - k) as f64
    };
    (log_c + log_p + log_q).exp()
}
