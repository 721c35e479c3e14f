//! Binned anomaly-score table mapping NLPD scores to outlier counts.
//!
//! Calibration scores with known labels `0..=t` are divided into `Q`
//! equal-width bins spanning the observed score range. Each bin takes the
//! label most common among its scores; empty bins inherit the label of the
//! nearest non-empty bin, resolving distance ties toward the larger bin
//! index. At query time a score below the range maps to 0, above the range
//! to `t`, and interior bin edges belong to the bin on their right.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreHistogram {
    bin_count: usize,
    max_label: usize,
    s_min: f64,
    s_max: f64,
    /// Raw occupancy counts, `bin_count` rows of `max_label + 1` entries.
    counts: Vec<u64>,
    total: u64,
    /// Assigned label per bin.
    labels: Vec<usize>,
}

/// Build the histogram from `(score, label)` calibration pairs.
pub fn build_histogram(
    scores: &[(f64, usize)],
    bins: usize,
    max_label: usize,
) -> Result<ScoreHistogram> {
    if scores.is_empty() {
        return Err(Error::InvalidConfig(
            "histogram needs at least one score".into(),
        ));
    }
    if bins == 0 {
        return Err(Error::InvalidConfig(
            "histogram needs at least one bin".into(),
        ));
    }
    if let Some(&(s, l)) = scores
        .iter()
        .find(|(s, l)| !s.is_finite() || *l > max_label)
    {
        return Err(Error::InvalidConfig(format!(
            "bad calibration pair (score {s}, label {l}), labels must be <= {max_label}"
        )));
    }
    let s_min = scores.iter().map(|&(s, _)| s).fold(f64::INFINITY, f64::min);
    let s_max = scores
        .iter()
        .map(|&(s, _)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut hist = ScoreHistogram {
        bin_count: bins,
        max_label,
        s_min,
        s_max,
        counts: vec![0; bins * (max_label + 1)],
        total: scores.len() as u64,
        labels: vec![0; bins],
    };
    for &(s, l) in scores {
        let j = hist.bin_of(s);
        hist.counts[j * (max_label + 1) + l] += 1;
    }
    // Majority label per non-empty bin; argmax ties resolve to the smaller label.
    let width = max_label + 1;
    let mut occupied: Vec<bool> = vec![false; bins];
    for j in 0..bins {
        let row = &hist.counts[j * width..(j + 1) * width];
        let row_total: u64 = row.iter().sum();
        if row_total == 0 {
            continue;
        }
        occupied[j] = true;
        let mut best = 0usize;
        for (l, &count) in row.iter().enumerate() {
            if count > row[best] {
                best = l;
            }
        }
        hist.labels[j] = best;
    }
    // Empty bins inherit from the nearest occupied bin, larger index on ties.
    for j in 0..bins {
        if occupied[j] {
            continue;
        }
        'search: for dist in 1..bins {
            let right = j + dist;
            if right < bins && occupied[right] {
                hist.labels[j] = hist.labels[right];
                break 'search;
            }
            if dist <= j && occupied[j - dist] {
                hist.labels[j] = hist.labels[j - dist];
                break 'search;
            }
        }
    }
    Ok(hist)
}

impl ScoreHistogram {
    /// Bin index for an in-range score. Interior edges round down into the
    /// bin whose left edge they are; the maximum score joins the last bin.
    fn bin_of(&self, score: f64) -> usize {
        let span = self.s_max - self.s_min;
        if span <= 0.0 {
            return 0;
        }
        let raw = ((score - self.s_min) / span * self.bin_count as f64).floor() as usize;
        raw.min(self.bin_count - 1)
    }

    /// Predicted outlier count for a pool with this anomaly score.
    pub fn label_pool(&self, score: f64) -> usize {
        if score < self.s_min {
            return 0;
        }
        if score > self.s_max {
            return self.max_label;
        }
        self.labels[self.bin_of(score)]
    }

    pub fn bin_count(&self) -> usize {
        self.bin_count
    }

    pub fn max_label(&self) -> usize {
        self.max_label
    }

    pub fn score_range(&self) -> (f64, f64) {
        (self.s_min, self.s_max)
    }

    pub fn bin_label(&self, j: usize) -> usize {
        self.labels[j]
    }

    /// Left edge of bin `j`.
    pub fn bin_edge(&self, j: usize) -> f64 {
        self.s_min + (self.s_max - self.s_min) * j as f64 / self.bin_count as f64
    }

    /// `H(j, l)`: fraction of calibration pools with label `l` in bin `j`.
    pub fn fraction(&self, j: usize, l: usize) -> f64 {
        self.counts[j * (self.max_label + 1) + l] as f64 / self.total as f64
    }

    /// Total calibration pools.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Sum of raw counts; always equals `total`.
    pub fn count_sum(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Parse(format!("histogram serialization failed: {e}")))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("bad histogram file: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_label_paints_every_bin() {
        let scores: Vec<(f64, usize)> = (0..50).map(|i| (i as f64, 2)).collect();
        let hist = build_histogram(&scores, 10, 5).unwrap();
        for j in 0..10 {
            assert_eq!(hist.bin_label(j), 2);
        }
        assert_eq!(hist.label_pool(25.0), 2);
    }

    #[test]
    fn out_of_range_scores_take_boundary_labels() {
        let scores = vec![(0.0, 1), (10.0, 3)];
        let hist = build_histogram(&scores, 4, 5).unwrap();
        assert_eq!(hist.label_pool(-0.5), 0);
        assert_eq!(hist.label_pool(10.5), 5);
        assert_eq!(hist.label_pool(0.0), 1);
        assert_eq!(hist.label_pool(10.0), 3);
    }

    #[test]
    fn equidistant_empty_bin_takes_the_right_neighbor() {
        // Five bins over [0,5): occupants in bins 0 (label 1) and 4 (label 2);
        // bin 2 is equidistant and must take label 2.
        let scores = vec![(0.5, 1), (4.5, 2)];
        let hist = build_histogram(&scores, 5, 5).unwrap();
        assert_eq!(hist.bin_label(0), 1);
        assert_eq!(hist.bin_label(4), 2);
        assert_eq!(hist.bin_label(2), 2, "tie should resolve right");
        assert_eq!(hist.bin_label(1), 1);
        assert_eq!(hist.bin_label(3), 2);
    }

    #[test]
    fn interior_edges_belong_to_the_right_bin() {
        // Four bins of width 1 over [0,4]: interior edges sit at 1, 2, 3.
        let scores = vec![(0.0, 0), (1.0, 1), (2.0, 2), (3.0, 3), (4.0, 3)];
        let hist = build_histogram(&scores, 4, 3).unwrap();
        assert_eq!(hist.label_pool(1.0), 1);
        assert_eq!(hist.label_pool(2.0), 2);
        assert_eq!(hist.label_pool(3.0), 3);
        // s_max itself stays in the last bin rather than overflowing to t.
        assert_eq!(hist.label_pool(4.0), 3);
    }

    #[test]
    fn majority_labeling_with_fraction_table() {
        let mut scores = Vec::new();
        for _ in 0..6 {
            scores.push((0.25, 0));
        }
        for _ in 0..4 {
            scores.push((0.30, 1));
        }
        for _ in 0..10 {
            scores.push((0.75, 1));
        }
        let hist = build_histogram(&scores, 2, 1).unwrap();
        assert_eq!(hist.bin_label(0), 0);
        assert_eq!(hist.bin_label(1), 1);
        assert!((hist.fraction(0, 0) - 0.3).abs() < 1e-12);
        assert!((hist.fraction(0, 1) - 0.2).abs() < 1e-12);
        assert!((hist.fraction(1, 1) - 0.5).abs() < 1e-12);
        assert_eq!(hist.count_sum(), hist.total());
    }

    #[test]
    fn degenerate_identical_scores() {
        let scores = vec![(3.0, 2), (3.0, 2), (3.0, 0)];
        let hist = build_histogram(&scores, 500, 5).unwrap();
        assert_eq!(hist.label_pool(3.0), 2);
        assert_eq!(hist.label_pool(2.9), 0);
        assert_eq!(hist.label_pool(3.1), 5);
    }

    #[test]
    fn production_scale_configuration_accepted() {
        let scores: Vec<(f64, usize)> = (0..10_000)
            .map(|i| (i as f64 / 100.0, (i % 6) as usize))
            .collect();
        let hist = build_histogram(&scores, 500, 5).unwrap();
        assert_eq!(hist.bin_count(), 500);
        assert_eq!(hist.max_label(), 5);
        assert_eq!(hist.count_sum(), 10_000);
    }

    #[test]
    fn training_scores_reproduce_their_bin_majority() {
        let scores: Vec<(f64, usize)> = (0..200)
            .map(|i| {
                let s = i as f64 / 10.0;
                let l = if s < 10.0 { 0 } else { 1 };
                (s, l)
            })
            .collect();
        let hist = build_histogram(&scores, 20, 1).unwrap();
        for &(s, _) in &scores {
            let j = hist.bin_of(s);
            assert_eq!(hist.label_pool(s), hist.bin_label(j));
        }
    }

    #[test]
    fn json_round_trip() {
        let scores = vec![(0.0, 0), (1.0, 1), (2.0, 2)];
        let hist = build_histogram(&scores, 8, 3).unwrap();
        let text = serde_json::to_string(&hist).unwrap();
        let restored: ScoreHistogram = serde_json::from_str(&text).unwrap();
        assert_eq!(restored.label_pool(1.4), hist.label_pool(1.4));
        assert_eq!(restored.score_range(), hist.score_range());
    }
}
