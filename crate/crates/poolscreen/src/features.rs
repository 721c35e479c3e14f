//! Synthetic pool/item feature vectors standing in for a network's
//! penultimate-layer embeddings.
//!
//! Features for a pool with `l` outliers are drawn from a Gaussian cluster
//! whose center sits `separation * sqrt(l)` away from the on-topic region
//! along the first axis, so anomaly scores grow with the outlier count in
//! roughly equal NLPD steps and the separation knob dials the pool-label
//! confusion from perfect to heavily overlapping. Count-0 features spread
//! over a few sub-clusters to give the on-topic class some internal
//! structure worth a multi-component mixture.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticFeatureConfig {
    /// Feature dimension.
    pub dim: usize,
    /// Largest outlier count a pool can carry (`t`).
    pub max_count: usize,
    /// Distance scale between adjacent count clusters.
    pub separation: f64,
    /// Within-cluster standard deviation.
    pub spread: f64,
    /// Sub-clusters of the count-0 (on-topic) class.
    pub base_clusters: usize,
    pub seed: u64,
}

impl Default for SyntheticFeatureConfig {
    fn default() -> Self {
        SyntheticFeatureConfig {
            dim: 64,
            max_count: 5,
            separation: 8.0,
            spread: 1.0,
            base_clusters: 2,
            seed: 0,
        }
    }
}

impl SyntheticFeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidConfig(
                "feature dimension must be >= 1".into(),
            ));
        }
        if self.base_clusters == 0 {
            return Err(Error::InvalidConfig(
                "need at least one base cluster".into(),
            ));
        }
        let spread_ok = self.spread > 0.0;
        let separation_ok = self.separation >= 0.0;
        if !spread_ok || !separation_ok {
            return Err(Error::InvalidConfig(
                "spread must be positive and separation nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Draws pool/item features for given outlier counts.
#[derive(Debug, Clone)]
pub struct FeatureGenerator {
    cfg: SyntheticFeatureConfig,
    rng: ChaCha8Rng,
}

impl FeatureGenerator {
    pub fn new(cfg: SyntheticFeatureConfig) -> Result<Self> {
        cfg.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Ok(FeatureGenerator { cfg, rng })
    }

    pub fn config(&self) -> &SyntheticFeatureConfig {
        &self.cfg
    }

    /// Reset the stream, e.g. to re-derive per-chunk generators.
    pub fn reseeded(&self, seed: u64) -> Self {
        let mut clone = self.clone();
        clone.rng = ChaCha8Rng::seed_from_u64(seed);
        clone
    }

    /// Center of the cluster for pools with `count` outliers. The count-0
    /// class cycles through its sub-clusters via `variant`.
    fn center(&self, count: usize, variant: usize, out: &mut [f64]) {
        out.fill(0.0);
        if count == 0 {
            let b = variant % self.cfg.base_clusters;
            // Sub-clusters fan out along later axes, away from the count axis.
            if b > 0 && self.cfg.dim > 1 {
                let axis = 1 + (b - 1) % (self.cfg.dim - 1);
                out[axis] = 4.0 * self.cfg.spread * b as f64;
            }
        } else {
            out[0] = self.cfg.separation * (count as f64).sqrt();
        }
    }

    /// Draw one feature vector for a pool containing `count` outliers.
    pub fn pool_feature(&mut self, count: usize) -> Vec<f64> {
        assert!(
            count <= self.cfg.max_count,
            "count {count} above configured maximum {}",
            self.cfg.max_count
        );
        let normal = Normal::new(0.0, self.cfg.spread).expect("validated spread");
        let variant = if self.cfg.base_clusters > 1 {
            self.rng.gen_range(0..self.cfg.base_clusters)
        } else {
            0
        };
        let mut x = vec![0.0; self.cfg.dim];
        self.center(count, variant, &mut x);
        for v in x.iter_mut() {
            *v += normal.sample(&mut self.rng);
        }
        x
    }

    /// Draw one per-item feature: items are pools of size one with a binary
    /// label.
    pub fn item_feature(&mut self, positive: bool) -> Vec<f64> {
        self.pool_feature(usize::from(positive))
    }
}
