//! Simulated pool-count oracle: populations, exact counts, and the calibrated
//! confusion model standing in for a noisy counting stage.

use std::fmt;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::PoolingMatrix;

/// Per-item binary ground truth or verdict; entry `1` marks a flagged item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector(Vec<u8>);

impl LabelVector {
    pub fn zeros(n: usize) -> Self {
        LabelVector(vec![0; n])
    }

    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::Parse("label vector entries must be 0 or 1".into()));
        }
        Ok(LabelVector(bits))
    }

    pub fn from_support(n: usize, support: &[usize]) -> Self {
        let mut bits = vec![0u8; n];
        for &i in support {
            bits[i] = 1;
        }
        LabelVector(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, value: u8) {
        debug_assert!(value <= 1);
        self.0[i] = value;
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn count_positives(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    /// Indices of the flagged items.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| (b == 1).then_some(i))
            .collect()
    }

    /// One `0`/`1` character per item, no separators.
    pub fn to_line(&self) -> String {
        self.0
            .iter()
            .map(|&b| if b == 1 { '1' } else { '0' })
            .collect()
    }

    pub fn from_line(line: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(line.len());
        for ch in line.trim_end().chars() {
            match ch {
                '0' => bits.push(0),
                '1' => bits.push(1),
                other => {
                    return Err(Error::Parse(format!(
                        "label line contains {other:?}, expected 0/1"
                    )))
                }
            }
        }
        Ok(LabelVector(bits))
    }
}

impl fmt::Display for LabelVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}

/// Per-pool observed counts; entry `q` is the reported number of flagged
/// items in pool `q`, always within `0..=r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountVector(Vec<u32>);

impl CountVector {
    pub fn new(counts: Vec<u32>) -> Self {
        CountVector(counts)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, q: usize) -> u32 {
        self.0[q]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn sum(&self) -> u64 {
        self.0.iter().map(|&v| v as u64).sum()
    }

    /// Collapse counts to binary pool outcomes: 1 iff the count is nonzero.
    pub fn binarize(&self) -> Vec<u8> {
        self.0.iter().map(|&v| u8::from(v > 0)).collect()
    }

    /// Counts as whitespace-separated integers.
    pub fn to_line(&self) -> String {
        self.0
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn from_line(line: &str) -> Result<Self> {
        let mut counts = Vec::new();
        for tok in line.split_whitespace() {
            counts.push(
                tok.parse::<u32>()
                    .map_err(|_| Error::Parse(format!("bad count value {tok:?}")))?,
            );
        }
        Ok(CountVector(counts))
    }
}

/// Exact pool counts `y = M x`.
pub fn exact_counts(matrix: &PoolingMatrix, labels: &LabelVector) -> Result<CountVector> {
    if labels.len() != matrix.n() {
        return Err(Error::DimensionMismatch {
            what: "label vector",
            expected: matrix.n(),
            got: labels.len(),
        });
    }
    let counts = (0..matrix.m())
        .map(|q| {
            matrix
                .pool_items(q)
                .iter()
                .map(|&i| labels.get(i as usize) as u32)
                .sum()
        })
        .collect();
    Ok(CountVector(counts))
}

/// Row-stochastic confusion model: `row[g][s]` is the probability that a pool
/// whose true count is `g` is reported as `s`. The embedded seed makes
/// [`noisy_counts`] a deterministic function of its inputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfusionModel {
    rows: Vec<Vec<f64>>,
    seed: u64,
}

impl ConfusionModel {
    const ROW_SUM_TOL: f64 = 1e-9;

    pub fn new(rows: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        let size = rows.len();
        if size == 0 {
            return Err(Error::InvalidConfig(
                "confusion model must be non-empty".into(),
            ));
        }
        for (g, row) in rows.iter().enumerate() {
            if row.len() != size {
                return Err(Error::DimensionMismatch {
                    what: "confusion model row",
                    expected: size,
                    got: row.len(),
                });
            }
            if row.iter().any(|&p| p < 0.0 || !p.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "confusion row {g} has negative or non-finite entries"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > Self::ROW_SUM_TOL {
                return Err(Error::InvalidConfig(format!(
                    "confusion row {g} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(ConfusionModel { rows, seed })
    }

    /// Noise-free model: the report always equals the true count.
    pub fn identity(r: usize, seed: u64) -> Self {
        let size = r + 1;
        let rows = (0..size)
            .map(|g| (0..size).map(|s| f64::from(u8::from(s == g))).collect())
            .collect();
        ConfusionModel { rows, seed }
    }

    /// Default noise model: the reported count stays within one of the truth.
    /// Interior rows put `correct` mass on the diagonal and split the rest
    /// evenly on the two neighbours; boundary rows are renormalized.
    pub fn tridiagonal(r: usize, correct: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&correct) {
            return Err(Error::InvalidConfig(format!(
                "diagonal probability {correct} outside [0,1]"
            )));
        }
        let size = r + 1;
        let off = (1.0 - correct) / 2.0;
        let rows = (0..size)
            .map(|g| {
                let mut row = vec![0.0; size];
                row[g] = correct;
                if g > 0 {
                    row[g - 1] = off;
                }
                if g + 1 < size {
                    row[g + 1] = off;
                }
                let sum: f64 = row.iter().sum();
                row.iter_mut().for_each(|p| *p /= sum);
                row
            })
            .collect();
        Ok(ConfusionModel { rows, seed })
    }

    /// Number of count levels, `r + 1`.
    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn row(&self, g: usize) -> &[f64] {
        &self.rows[g]
    }

    /// Probability of reporting `s` when the truth is `g`.
    pub fn prob(&self, g: usize, s: usize) -> f64 {
        self.rows[g][s]
    }

    /// True iff all mass sits within one step of the diagonal.
    pub fn is_tridiagonal(&self) -> bool {
        self.rows.iter().enumerate().all(|(g, row)| {
            row.iter()
                .enumerate()
                .all(|(s, &p)| p == 0.0 || s.abs_diff(g) <= 1)
        })
    }

    fn sample(&self, g: usize, rng: &mut ChaCha8Rng) -> u32 {
        let row = &self.rows[g];
        let mut x: f64 = rng.gen();
        for (s, &p) in row.iter().enumerate() {
            x -= p;
            if x < 0.0 {
                return s as u32;
            }
        }
        (row.len() - 1) as u32
    }

    /// CSV with `r+1` lines of `r+1` comma-separated probabilities.
    pub fn to_csv(&self) -> String {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|p| format!("{p}"))
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join("\n")
            + "\n"
    }

    pub fn from_csv(text: &str, seed: u64) -> Result<Self> {
        let mut rows = Vec::new();
        for line in text.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad probability {tok:?}")))
                })
                .collect::<Result<_>>()?;
            rows.push(row);
        }
        ConfusionModel::new(rows, seed)
    }

    pub fn load_csv(path: &Path, seed: u64) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text, seed)
    }
}

/// Report noisy pool counts: each pool's report is drawn independently from
/// the confusion row of its true count. Deterministic for a fixed model seed.
pub fn noisy_counts(
    matrix: &PoolingMatrix,
    labels: &LabelVector,
    cm: &ConfusionModel,
) -> Result<CountVector> {
    let exact = exact_counts(matrix, labels)?;
    if cm.size() != matrix.r() + 1 {
        return Err(Error::DimensionMismatch {
            what: "confusion model size",
            expected: matrix.r() + 1,
            got: cm.size(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cm.seed());
    let counts = exact
        .as_slice()
        .iter()
        .map(|&g| cm.sample(g as usize, &mut rng))
        .collect();
    Ok(CountVector(counts))
}

/// 2x2 confusion for a binary per-item or per-pool test;
/// `fn_rate`/`fp_rate` are the miss and false-alarm probabilities.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BinaryTestModel {
    pub fn_rate: f64,
    pub fp_rate: f64,
}

impl BinaryTestModel {
    pub fn perfect() -> Self {
        BinaryTestModel {
            fn_rate: 0.0,
            fp_rate: 0.0,
        }
    }

    pub fn new(fn_rate: f64, fp_rate: f64) -> Result<Self> {
        for (name, v) in [("fn_rate", fn_rate), ("fp_rate", fp_rate)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!("{name} = {v} outside [0,1]")));
            }
        }
        Ok(BinaryTestModel { fn_rate, fp_rate })
    }

    /// Outcome of one binary test on an item or pool whose truth is `positive`.
    pub fn test(&self, positive: bool, rng: &mut ChaCha8Rng) -> bool {
        let flip: f64 = rng.gen();
        if positive {
            flip >= self.fn_rate
        } else {
            flip < self.fp_rate
        }
    }
}

/// How a population's flagged items are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    /// Each item is flagged independently with probability `p`.
    Binomial,
    /// Exactly `round(p * n)` items are flagged, at uniformly random positions.
    FixedCount,
}

/// A synthetic population with known ground truth.
#[derive(Debug, Clone)]
pub struct Population {
    n: usize,
    prevalence: f64,
    seed: u64,
    labels: LabelVector,
}

impl Population {
    /// Write the ground-truth labels as one 0/1 character per item, no
    /// separators.
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.labels.to_line()).map_err(|e| Error::io(path, e))
    }

    /// Read a population file (one 0/1 character per item, newline-free);
    /// prevalence is taken from the observed fraction.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let labels = LabelVector::from_line(&text)?;
        let n = labels.len();
        let prevalence = if n == 0 {
            0.0
        } else {
            labels.count_positives() as f64 / n as f64
        };
        Ok(Population {
            n,
            prevalence,
            seed: 0,
            labels,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn prevalence(&self) -> f64 {
        self.prevalence
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn labels(&self) -> &LabelVector {
        &self.labels
    }

    pub fn count_positives(&self) -> usize {
        self.labels.count_positives()
    }
}

/// Draw a population of `n` items at prevalence `p`.
pub fn sample_population(n: usize, p: f64, mode: SamplingMode, seed: u64) -> Result<Population> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidConfig(format!(
            "prevalence {p} outside [0,1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = match mode {
        SamplingMode::Binomial => {
            let bern = Bernoulli::new(p).expect("validated probability");
            LabelVector((0..n).map(|_| u8::from(bern.sample(&mut rng))).collect())
        }
        SamplingMode::FixedCount => {
            let k = ((p * n as f64).round() as usize).min(n);
            let idx = rand::seq::index::sample(&mut rng, n, k);
            let mut bits = vec![0u8; n];
            for i in idx {
                bits[i] = 1;
            }
            LabelVector(bits)
        }
    };
    Ok(Population {
        n,
        prevalence: p,
        seed,
        labels,
    })
}
