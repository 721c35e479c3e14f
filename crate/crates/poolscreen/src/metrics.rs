//! Verdict quality metrics: sensitivity and specificity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::LabelVector;

/// Running confusion tallies between ground truth and predictions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_positives: u64,
    pub false_positives: u64,
    pub true_negatives: u64,
    pub false_negatives: u64,
}

impl ConfusionCounts {
    pub fn accumulate(&mut self, truth: &LabelVector, predicted: &LabelVector) -> Result<()> {
        if truth.len() != predicted.len() {
            return Err(Error::DimensionMismatch {
                what: "verdict vector",
                expected: truth.len(),
                got: predicted.len(),
            });
        }
        for i in 0..truth.len() {
            match (truth.get(i), predicted.get(i)) {
                (1, 1) => self.true_positives += 1,
                (1, 0) => self.false_negatives += 1,
                (0, 1) => self.false_positives += 1,
                _ => self.true_negatives += 1,
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &ConfusionCounts) {
        self.true_positives += other.true_positives;
        self.false_positives += other.false_positives;
        self.true_negatives += other.true_negatives;
        self.false_negatives += other.false_negatives;
    }

    pub fn total(&self) -> u64 {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }

    pub fn actual_positives(&self) -> u64 {
        self.true_positives + self.false_negatives
    }

    pub fn actual_negatives(&self) -> u64 {
        self.true_negatives + self.false_positives
    }

    /// TP / (TP + FN); `None` when there are no actual positives.
    pub fn sensitivity(&self) -> Option<f64> {
        let denom = self.actual_positives();
        (denom > 0).then(|| self.true_positives as f64 / denom as f64)
    }

    /// TN / (TN + FP); `None` when there are no actual negatives.
    pub fn specificity(&self) -> Option<f64> {
        let denom = self.actual_negatives();
        (denom > 0).then(|| self.true_negatives as f64 / denom as f64)
    }
}

/// Sensitivity and specificity of `predicted` against `truth`; `None` marks a
/// rate whose denominator is empty.
pub fn compute_metrics(
    truth: &LabelVector,
    predicted: &LabelVector,
) -> Result<(Option<f64>, Option<f64>)> {
    let mut counts = ConfusionCounts::default();
    counts.accumulate(truth, predicted)?;
    Ok((counts.sensitivity(), counts.specificity()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction() {
        let truth = LabelVector::from_bits(vec![1, 0, 0, 1, 0]).unwrap();
        let (sens, spec) = compute_metrics(&truth, &truth).unwrap();
        assert_eq!(sens, Some(1.0));
        assert_eq!(spec, Some(1.0));
    }

    #[test]
    fn complemented_prediction() {
        let truth = LabelVector::from_bits(vec![1, 0, 1, 0]).unwrap();
        let pred = LabelVector::from_bits(vec![0, 1, 0, 1]).unwrap();
        let (sens, spec) = compute_metrics(&truth, &pred).unwrap();
        assert_eq!(sens, Some(0.0));
        assert_eq!(spec, Some(0.0));
    }

    #[test]
    fn direct_count_example() {
        let truth = LabelVector::from_bits(vec![1, 0, 0, 1]).unwrap();
        let pred = LabelVector::from_bits(vec![1, 0, 1, 1]).unwrap();
        let (sens, spec) = compute_metrics(&truth, &pred).unwrap();
        assert_eq!(sens, Some(1.0));
        assert_eq!(spec, Some(0.5));
    }

    #[test]
    fn undefined_rates_are_none() {
        let truth = LabelVector::zeros(4);
        let pred = LabelVector::from_bits(vec![0, 1, 0, 0]).unwrap();
        let (sens, spec) = compute_metrics(&truth, &pred).unwrap();
        assert_eq!(sens, None);
        assert_eq!(spec, Some(0.75));
    }

    #[test]
    fn counts_reconcile() {
        let truth = LabelVector::from_bits(vec![1, 0, 0, 1, 1, 0, 0, 0]).unwrap();
        let pred = LabelVector::from_bits(vec![0, 1, 0, 1, 1, 0, 1, 0]).unwrap();
        let mut c = ConfusionCounts::default();
        c.accumulate(&truth, &pred).unwrap();
        assert_eq!(c.total(), 8);
        assert_eq!(c.actual_positives(), 3);
        assert_eq!(c.actual_negatives(), 5);
    }

    #[test]
    fn length_mismatch_rejected() {
        let truth = LabelVector::zeros(4);
        let pred = LabelVector::zeros(5);
        assert!(compute_metrics(&truth, &pred).is_err());
    }
}
