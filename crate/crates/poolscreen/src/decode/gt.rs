//! Binary group-testing decoders: COMP, NCOMP, and two-round Dorfman testing.

use crate::error::{Error, Result};
use crate::matrix::PoolingMatrix;
use crate::oracle::LabelVector;

use super::check_outcome_len;

/// COMP: an item is cleared as soon as any of its pools tests negative;
/// everything else is declared positive.
pub fn comp_decode(matrix: &PoolingMatrix, outcomes: &[u8]) -> Result<LabelVector> {
    check_outcome_len(matrix, outcomes.len())?;
    let mut verdicts = LabelVector::zeros(matrix.n());
    for i in 0..matrix.n() {
        let cleared = matrix
            .item_pools(i)
            .iter()
            .any(|&q| outcomes[q as usize] == 0);
        if !cleared {
            verdicts.set(i, 1);
        }
    }
    Ok(verdicts)
}

/// NCOMP: an item is declared positive when strictly more than `t` of its
/// pools test positive. Equality at `t` clears the item.
pub fn ncomp_decode(matrix: &PoolingMatrix, outcomes: &[u8], t: usize) -> Result<LabelVector> {
    check_outcome_len(matrix, outcomes.len())?;
    if t >= matrix.c() {
        return Err(Error::InvalidConfig(format!(
            "NCOMP tolerance t={t} must be below the column weight c={}",
            matrix.c()
        )));
    }
    let mut verdicts = LabelVector::zeros(matrix.n());
    for i in 0..matrix.n() {
        let positives = matrix
            .item_pools(i)
            .iter()
            .filter(|&&q| outcomes[q as usize] == 1)
            .count();
        if positives > t {
            verdicts.set(i, 1);
        }
    }
    Ok(verdicts)
}

/// Pool size minimizing the worst-case two-round test count, `round(sqrt(n/k))`.
pub fn optimal_dorfman_pool_size(n: usize, k: usize) -> usize {
    assert!(k >= 1 && k <= n, "need 1 <= k <= n");
    ((n as f64 / k as f64).sqrt().round() as usize).max(1)
}

/// Outcome of a two-round Dorfman run.
#[derive(Debug, Clone)]
pub struct DorfmanPlan {
    pub group_size: usize,
    /// One pooled test per group.
    pub round1_tests: usize,
    /// Individual retests of items in positive groups.
    pub round2_tests: usize,
    pub verdicts: LabelVector,
}

impl DorfmanPlan {
    pub fn tests_used(&self) -> usize {
        self.round1_tests + self.round2_tests
    }
}

/// Two-round Dorfman testing over `n_items` consecutive groups of
/// `group_size` (the final group may be shorter and is tested as-is).
///
/// `pool_oracle` reports whether a group tests positive; `item_oracle`
/// reports the individual verdict for one item. Items in negative groups are
/// cleared without individual tests. The oracles are injected so the same
/// decoder serves classification (confusion-model oracles) and outlier
/// detection (histogram-labeler oracles).
pub fn dorfman_decode(
    n_items: usize,
    group_size: usize,
    mut pool_oracle: impl FnMut(&[usize]) -> bool,
    mut item_oracle: impl FnMut(usize) -> bool,
) -> DorfmanPlan {
    assert!(group_size >= 1, "group size must be at least 1");
    let mut verdicts = LabelVector::zeros(n_items);
    let mut round1 = 0usize;
    let mut round2 = 0usize;
    let mut start = 0usize;
    while start < n_items {
        let end = (start + group_size).min(n_items);
        let group: Vec<usize> = (start..end).collect();
        round1 += 1;
        if pool_oracle(&group) {
            for &i in &group {
                round2 += 1;
                if item_oracle(i) {
                    verdicts.set(i, 1);
                }
            }
        }
        start = end;
    }
    DorfmanPlan {
        group_size,
        round1_tests: round1,
        round2_tests: round2,
        verdicts,
    }
}
