//! End-to-end experiment runner: prevalence sweeps over chunked populations,
//! per-method metrics, cost accounting, and deterministic CSV emission.
//!
//! Chunks are independent work units decoded in parallel; every random draw
//! is seeded from `(master seed, prevalence index, repeat, chunk index)` so
//! results do not depend on scheduling. A rerun with the same config and
//! master seed produces byte-identical result files; wall-clock timings are
//! only recorded when `record_timings` is set, since they would break that.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::CostModel;
use crate::decode::classo::gram_spectral_bound;
use crate::decode::{
    classo_decode_with_lipschitz, comp_decode, dorfman_decode, mip_decode, ncomp_decode,
    DecoderConfig,
};
use crate::error::{Error, Result};
use crate::features::{FeatureGenerator, SyntheticFeatureConfig};
use crate::gmm::{fit_gmm, select_k, FitOptions, GmmModel};
use crate::histogram::{build_histogram, ScoreHistogram};
use crate::matrix::PoolingMatrix;
use crate::metrics::ConfusionCounts;
use crate::oracle::{
    exact_counts, noisy_counts, sample_population, BinaryTestModel, ConfusionModel, CountVector,
    LabelVector, SamplingMode,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixConfig {
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub c: usize,
    pub seed: u64,
}

impl Default for MatrixConfig {
    fn default() -> Self {
        MatrixConfig {
            n: 100,
            m: 50,
            r: 8,
            c: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PopulationConfig {
    pub size: usize,
    pub prevalences: Vec<f64>,
    pub mode: SamplingMode,
}

/// The nine-point prevalence sweep used throughout the experiments.
pub const DEFAULT_PREVALENCES: [f64; 9] = [0.001, 0.002, 0.005, 0.01, 0.02, 0.03, 0.04, 0.05, 0.1];

impl Default for PopulationConfig {
    fn default() -> Self {
        PopulationConfig {
            size: 100_000,
            prevalences: DEFAULT_PREVALENCES.to_vec(),
            mode: SamplingMode::FixedCount,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    /// Diagonal mass of the default tridiagonal confusion model.
    pub correct_prob: f64,
    /// Optional CSV overriding the tridiagonal default.
    pub confusion_csv: Option<PathBuf>,
    /// Miss / false-alarm rates of the binary per-item test.
    pub item_fn_rate: f64,
    pub item_fp_rate: f64,
    /// Optional separate 2x2 model for binary pool tests; when absent, binary
    /// outcomes come from thresholding the counting oracle at >= 1.
    pub pool_binary: Option<BinaryTestModel>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            correct_prob: 0.9,
            confusion_csv: None,
            item_fn_rate: 0.05,
            item_fp_rate: 0.05,
            pool_binary: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Comp,
    Ncomp,
    Dorfman,
    Individual,
    Mip,
    Classo,
}

impl Method {
    /// Name used in result files; decoder parameters are embedded the way
    /// the experiment tables label them.
    pub fn label(&self, settings: &DecoderSettings, outlier: bool) -> String {
        let base = match self {
            Method::Comp => "comp".to_string(),
            Method::Ncomp => format!("ncomp-{}", settings.ncomp_t),
            Method::Dorfman => format!("dorfman-{}", settings.dorfman_group),
            Method::Individual => "individual".to_string(),
            Method::Mip => "mip".to_string(),
            Method::Classo => "classo".to_string(),
        };
        if outlier {
            format!("{base}-od")
        } else {
            base
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DecoderSettings {
    #[serde(flatten)]
    pub config: DecoderConfig,
    pub ncomp_t: usize,
    pub dorfman_group: usize,
}

impl Default for DecoderSettings {
    fn default() -> Self {
        DecoderSettings {
            config: DecoderConfig {
                lambda: 0.1,
                max_nodes: 2500,
                ..DecoderConfig::default()
            },
            ncomp_t: 2,
            dorfman_group: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OutlierConfig {
    pub features: SyntheticFeatureConfig,
    /// Mixture size for the pool-score model; `select_from` overrides it by
    /// held-out likelihood when present.
    pub gmm_components: usize,
    pub select_from: Option<Vec<usize>>,
    pub gmm_train_pools: usize,
    pub calibration_pools_per_label: usize,
    pub bins: usize,
    pub item_calibration_per_label: usize,
    pub item_bins: usize,
}

impl Default for OutlierConfig {
    fn default() -> Self {
        OutlierConfig {
            features: SyntheticFeatureConfig::default(),
            gmm_components: 2,
            select_from: None,
            gmm_train_pools: 3000,
            calibration_pools_per_label: 1500,
            bins: 500,
            item_calibration_per_label: 1500,
            item_bins: 500,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub matrix: MatrixConfig,
    pub population: PopulationConfig,
    pub oracle: OracleConfig,
    pub methods: Vec<Method>,
    pub decoder: DecoderSettings,
    pub outlier: OutlierConfig,
    pub repeats: usize,
    pub master_seed: u64,
    pub cost: CostModel,
    pub record_timings: bool,
    pub dump_verdicts: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            matrix: MatrixConfig::default(),
            population: PopulationConfig::default(),
            oracle: OracleConfig::default(),
            methods: vec![
                Method::Comp,
                Method::Ncomp,
                Method::Dorfman,
                Method::Individual,
                Method::Mip,
                Method::Classo,
            ],
            decoder: DecoderSettings::default(),
            outlier: OutlierConfig::default(),
            repeats: 1,
            master_seed: 1,
            cost: CostModel::default(),
            record_timings: false,
            dump_verdicts: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no methods selected".into()));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidConfig("repeats must be >= 1".into()));
        }
        if self.population.size == 0 {
            return Err(Error::InvalidConfig("population size must be >= 1".into()));
        }
        if self.population.prevalences.is_empty() {
            return Err(Error::InvalidConfig("prevalence list is empty".into()));
        }
        for &p in &self.population.prevalences {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!(
                    "prevalence {p} outside [0,1]"
                )));
            }
        }
        if self.oracle.correct_prob < 0.0 || self.oracle.correct_prob > 1.0 {
            return Err(Error::InvalidConfig("correct_prob outside [0,1]".into()));
        }
        if self.decoder.dorfman_group == 0 {
            return Err(Error::InvalidConfig(
                "dorfman group size must be >= 1".into(),
            ));
        }
        self.decoder.config.validate()?;
        self.cost.validate()?;
        self.outlier.features.validate()?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::InvalidConfig(format!("bad config JSON: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Classification,
    Outlier,
}

/// One result row: a (method, prevalence, repeat) run.
#[derive(Debug, Clone, Serialize)]
pub struct RunRow {
    pub method: String,
    pub prevalence: f64,
    pub seed: u64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub cost_per_item: f64,
    pub tests_used: u64,
    pub wall_seconds: f64,
    pub counts: ConfusionCounts,
    /// Chunks whose decode errored; their items are excluded from metrics.
    pub failed_chunks: u64,
    /// Chunks where branch and bound returned a non-certified incumbent.
    pub nonoptimal_chunks: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub mode: Mode,
    pub rows: Vec<RunRow>,
    /// Extra mixture-scoring cost per item for outlier-detection runs,
    /// reported separately from the network cost model.
    pub od_scoring_cost_per_item: Option<f64>,
}

/// Stable seed derivation: a splitmix64 chain over the master seed and
/// context tags, so any (prevalence, repeat, chunk, purpose) tuple gets an
/// independent stream regardless of scheduling.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    fn splitmix64(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    let mut state = splitmix64(master);
    for &t in tags {
        state = splitmix64(state ^ splitmix64(t));
    }
    state
}

// Tag namespaces for derive_seed.
const TAG_REPEAT: u64 = 1;
const TAG_POPULATION: u64 = 2;
const TAG_CHUNK_NOISE: u64 = 3;
const TAG_DORFMAN: u64 = 4;
const TAG_INDIVIDUAL: u64 = 5;
const TAG_OD_MODEL: u64 = 10;
const TAG_OD_CHUNK: u64 = 11;
const TAG_OD_DORFMAN: u64 = 12;
const TAG_OD_INDIVIDUAL: u64 = 13;

/// Pool-score and item-score models fitted once per outlier experiment.
struct OdPipeline {
    pool_gmm: GmmModel,
    pool_hist: ScoreHistogram,
    item_gmm: GmmModel,
    item_hist: ScoreHistogram,
    max_count: usize,
}

fn fit_od_pipeline(cfg: &ExperimentConfig) -> Result<OdPipeline> {
    let od = &cfg.outlier;
    let seed = derive_seed(cfg.master_seed, &[TAG_OD_MODEL]);
    let mut gen = FeatureGenerator::new(SyntheticFeatureConfig {
        seed,
        ..od.features.clone()
    })?;
    let t = od.features.max_count;
    let clean: Vec<Vec<f64>> = (0..od.gmm_train_pools)
        .map(|_| gen.pool_feature(0))
        .collect();
    let fit_opts = FitOptions {
        seed,
        ..FitOptions::default()
    };
    let k = match &od.select_from {
        Some(candidates) => {
            let heldout: Vec<Vec<f64>> = (0..od.gmm_train_pools / 4)
                .map(|_| gen.pool_feature(0))
                .collect();
            select_k(&clean, &heldout, candidates, &fit_opts)?
        }
        None => od.gmm_components,
    };
    let pool_gmm = fit_gmm(&clean, k, &fit_opts)?.model;
    let mut calib = Vec::with_capacity(od.calibration_pools_per_label * (t + 1));
    for label in 0..=t {
        for _ in 0..od.calibration_pools_per_label {
            calib.push((pool_gmm.nlpd(&gen.pool_feature(label)), label));
        }
    }
    let pool_hist = build_histogram(&calib, od.bins, t)?;

    let clean_items: Vec<Vec<f64>> = (0..od.gmm_train_pools)
        .map(|_| gen.item_feature(false))
        .collect();
    let item_gmm = fit_gmm(&clean_items, k.min(2), &fit_opts)?.model;
    let mut item_calib = Vec::with_capacity(od.item_calibration_per_label * 2);
    for label in 0..=1usize {
        for _ in 0..od.item_calibration_per_label {
            item_calib.push((item_gmm.nlpd(&gen.item_feature(label == 1)), label));
        }
    }
    let item_hist = build_histogram(&item_calib, od.item_bins, 1)?;
    Ok(OdPipeline {
        pool_gmm,
        pool_hist,
        item_gmm,
        item_hist,
        max_count: t,
    })
}

/// Run the full experiment: every prevalence, repeat, and method.
pub fn run_experiment(cfg: &ExperimentConfig, mode: Mode) -> Result<MetricsReport> {
    run_experiment_inner(cfg, mode, None)
}

fn run_experiment_inner(
    cfg: &ExperimentConfig,
    mode: Mode,
    dump_dir: Option<&Path>,
) -> Result<MetricsReport> {
    cfg.validate()?;
    let matrix = PoolingMatrix::construct_balanced(
        cfg.matrix.n,
        cfg.matrix.m,
        cfg.matrix.r,
        cfg.matrix.c,
        cfg.matrix.seed,
    )?;
    let gram = gram_spectral_bound(&matrix);
    let confusion = match &cfg.oracle.confusion_csv {
        Some(path) => ConfusionModel::load_csv(path, 0)?,
        None => ConfusionModel::tridiagonal(cfg.matrix.r, cfg.oracle.correct_prob, 0)?,
    };
    if confusion.size() != cfg.matrix.r + 1 {
        return Err(Error::DimensionMismatch {
            what: "confusion model size",
            expected: cfg.matrix.r + 1,
            got: confusion.size(),
        });
    }
    let item_model = BinaryTestModel::new(cfg.oracle.item_fn_rate, cfg.oracle.item_fp_rate)?;
    let od = match mode {
        Mode::Outlier => Some(fit_od_pipeline(cfg)?),
        Mode::Classification => None,
    };

    let mut rows = Vec::new();
    for (p_idx, &p) in cfg.population.prevalences.iter().enumerate() {
        for rep in 0..cfg.repeats {
            let ctx = RunContext {
                cfg,
                matrix: &matrix,
                gram,
                confusion: &confusion,
                item_model,
                od: od.as_ref(),
                p_idx: p_idx as u64,
                rep: rep as u64,
            };
            let population = sample_population(
                cfg.population.size,
                p,
                cfg.population.mode,
                derive_seed(cfg.master_seed, &[TAG_POPULATION, p_idx as u64, rep as u64]),
            )?;
            for &method in &cfg.methods {
                let started = std::time::Instant::now();
                let outcome = ctx.run_method(method, &population)?;
                let wall = if cfg.record_timings {
                    started.elapsed().as_secs_f64()
                } else {
                    0.0
                };
                let label = method.label(&cfg.decoder, matches!(mode, Mode::Outlier));
                if cfg.dump_verdicts {
                    if let Some(dir) = dump_dir {
                        let mut text = String::new();
                        for line in &outcome.verdict_lines {
                            text.push_str(line);
                            text.push('\n');
                        }
                        let path = dir.join(format!("verdicts_{label}_{p}_{rep}.txt"));
                        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
                    }
                }
                rows.push(RunRow {
                    method: label,
                    prevalence: p,
                    seed: derive_seed(cfg.master_seed, &[TAG_REPEAT, rep as u64]),
                    sensitivity: outcome.counts.sensitivity(),
                    specificity: outcome.counts.specificity(),
                    cost_per_item: outcome.cost_per_item,
                    tests_used: outcome.tests_used,
                    wall_seconds: wall,
                    counts: outcome.counts,
                    failed_chunks: outcome.failed_chunks,
                    nonoptimal_chunks: outcome.nonoptimal_chunks,
                });
            }
        }
    }
    Ok(MetricsReport {
        mode,
        rows,
        od_scoring_cost_per_item: od.as_ref().map(|_| cfg.cost.od_score_cost),
    })
}

struct MethodOutcome {
    counts: ConfusionCounts,
    tests_used: u64,
    cost_per_item: f64,
    failed_chunks: u64,
    nonoptimal_chunks: u64,
    verdict_lines: Vec<String>,
}

struct RunContext<'a> {
    cfg: &'a ExperimentConfig,
    matrix: &'a PoolingMatrix,
    gram: f64,
    confusion: &'a ConfusionModel,
    item_model: BinaryTestModel,
    od: Option<&'a OdPipeline>,
    p_idx: u64,
    rep: u64,
}

impl RunContext<'_> {
    fn run_method(
        &self,
        method: Method,
        population: &crate::oracle::Population,
    ) -> Result<MethodOutcome> {
        match method {
            Method::Comp | Method::Ncomp | Method::Mip | Method::Classo => {
                self.run_chunked(method, population)
            }
            Method::Dorfman => self.run_dorfman(population),
            Method::Individual => self.run_individual(population),
        }
    }

    /// Non-adaptive methods: the population splits into chunks of `n`, each
    /// decoded independently (in parallel). The final short chunk is padded
    /// with known negatives that never enter the metrics.
    fn run_chunked(
        &self,
        method: Method,
        population: &crate::oracle::Population,
    ) -> Result<MethodOutcome> {
        let n = self.matrix.n();
        let total = population.n();
        let chunk_count = total.div_ceil(n);
        let results: Vec<Result<(ConfusionCounts, bool, String)>> = (0..chunk_count)
            .into_par_iter()
            .map(|chunk_idx| {
                let start = chunk_idx * n;
                let end = (start + n).min(total);
                let mut truth_bits = vec![0u8; n];
                for (off, i) in (start..end).enumerate() {
                    truth_bits[off] = population.labels().get(i);
                }
                let truth = LabelVector::from_bits(truth_bits).expect("bits");
                let real = end - start;
                let counts = self.chunk_counts(&truth, chunk_idx as u64)?;
                let verdicts = self.decode_chunk(method, &counts)?;
                let mut tallies = ConfusionCounts::default();
                let truth_real =
                    LabelVector::from_bits(truth.as_slice()[..real].to_vec()).expect("bits");
                let verdict_real =
                    LabelVector::from_bits(verdicts.0.as_slice()[..real].to_vec()).expect("bits");
                tallies.accumulate(&truth_real, &verdict_real)?;
                Ok((tallies, verdicts.1, verdict_real.to_line()))
            })
            .collect();
        let mut counts = ConfusionCounts::default();
        let mut failed = 0u64;
        let mut nonoptimal = 0u64;
        let mut lines = Vec::with_capacity(chunk_count);
        for r in results {
            match r {
                Ok((tallies, optimal, line)) => {
                    counts.merge(&tallies);
                    if !optimal {
                        nonoptimal += 1;
                    }
                    lines.push(line);
                }
                Err(_) => {
                    failed += 1;
                    lines.push(String::new());
                }
            }
        }
        Ok(MethodOutcome {
            counts,
            tests_used: (chunk_count * self.matrix.m()) as u64,
            cost_per_item: self.cfg.cost.nonadaptive(self.matrix.m(), n),
            failed_chunks: failed,
            nonoptimal_chunks: nonoptimal,
            verdict_lines: lines,
        })
    }

    /// Observed counts for one chunk: classification uses the noisy counting
    /// oracle; outlier detection scores synthetic pool features.
    fn chunk_counts(&self, truth: &LabelVector, chunk_idx: u64) -> Result<CountVector> {
        match self.od {
            None => {
                let seed = derive_seed(
                    self.cfg.master_seed,
                    &[TAG_CHUNK_NOISE, self.p_idx, self.rep, chunk_idx],
                );
                noisy_counts(self.matrix, truth, &self.confusion.clone().with_seed(seed))
            }
            Some(od) => {
                let exact = exact_counts(self.matrix, truth)?;
                let seed = derive_seed(
                    self.cfg.master_seed,
                    &[TAG_OD_CHUNK, self.p_idx, self.rep, chunk_idx],
                );
                let mut gen = FeatureGenerator::new(SyntheticFeatureConfig {
                    seed,
                    ..self.cfg.outlier.features.clone()
                })?;
                let counts = exact
                    .as_slice()
                    .iter()
                    .map(|&g| {
                        let feature = gen.pool_feature((g as usize).min(od.max_count));
                        od.pool_hist.label_pool(od.pool_gmm.nlpd(&feature)) as u32
                    })
                    .collect();
                Ok(CountVector::new(counts))
            }
        }
    }

    /// Returns verdicts plus an optimality flag (false only for budget-capped
    /// branch and bound).
    fn decode_chunk(&self, method: Method, counts: &CountVector) -> Result<(LabelVector, bool)> {
        let settings = &self.cfg.decoder;
        match method {
            Method::Comp => Ok((comp_decode(self.matrix, &counts.binarize())?, true)),
            Method::Ncomp => Ok((
                ncomp_decode(self.matrix, &counts.binarize(), settings.ncomp_t)?,
                true,
            )),
            Method::Mip => {
                let sol = mip_decode(self.matrix, counts, &settings.config)?;
                Ok((sol.verdicts, sol.optimal))
            }
            Method::Classo => {
                let sol =
                    classo_decode_with_lipschitz(self.matrix, counts, &settings.config, self.gram)?;
                Ok((sol.verdicts, true))
            }
            _ => unreachable!("chunked decode only handles non-adaptive methods"),
        }
    }

    fn run_dorfman(&self, population: &crate::oracle::Population) -> Result<MethodOutcome> {
        let g = self.cfg.decoder.dorfman_group;
        let n = population.n();
        let labels = population.labels();
        let seed = derive_seed(
            self.cfg.master_seed,
            &[
                if self.od.is_some() {
                    TAG_OD_DORFMAN
                } else {
                    TAG_DORFMAN
                },
                self.p_idx,
                self.rep,
            ],
        );
        let plan = match self.od {
            None => {
                let confusion = self.confusion;
                let item_model = self.item_model;
                let max_row = confusion.size() - 1;
                let mut pool_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0]));
                let mut item_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[1]));
                dorfman_decode(
                    n,
                    g,
                    |group| {
                        let true_count: usize = group.iter().map(|&i| labels.get(i) as usize).sum();
                        match &self.cfg.oracle.pool_binary {
                            Some(model) => model.test(true_count > 0, &mut pool_rng),
                            None => {
                                // Threshold a noisy count drawn from the confusion row.
                                let row = true_count.min(max_row);
                                sample_confusion_row(confusion, row, &mut pool_rng) > 0
                            }
                        }
                    },
                    |i| item_model.test(labels.get(i) == 1, &mut item_rng),
                )
            }
            Some(od) => {
                let mut gen = FeatureGenerator::new(SyntheticFeatureConfig {
                    seed: derive_seed(seed, &[2]),
                    ..self.cfg.outlier.features.clone()
                })?;
                let mut item_gen = FeatureGenerator::new(SyntheticFeatureConfig {
                    seed: derive_seed(seed, &[3]),
                    ..self.cfg.outlier.features.clone()
                })?;
                dorfman_decode(
                    n,
                    g,
                    |group| {
                        let true_count: usize = group.iter().map(|&i| labels.get(i) as usize).sum();
                        let feature = gen.pool_feature(true_count.min(od.max_count));
                        od.pool_hist.label_pool(od.pool_gmm.nlpd(&feature)) > 0
                    },
                    |i| {
                        let feature = item_gen.item_feature(labels.get(i) == 1);
                        od.item_hist.label_pool(od.item_gmm.nlpd(&feature)) > 0
                    },
                )
            }
        };
        let mut counts = ConfusionCounts::default();
        counts.accumulate(labels, &plan.verdicts)?;
        let retest_fraction = plan.round2_tests as f64 / n as f64;
        Ok(MethodOutcome {
            counts,
            tests_used: plan.tests_used() as u64,
            cost_per_item: self.cfg.cost.dorfman_observed(g, retest_fraction),
            failed_chunks: 0,
            nonoptimal_chunks: 0,
            verdict_lines: vec![plan.verdicts.to_line()],
        })
    }

    fn run_individual(&self, population: &crate::oracle::Population) -> Result<MethodOutcome> {
        let n = population.n();
        let labels = population.labels();
        let seed = derive_seed(
            self.cfg.master_seed,
            &[
                if self.od.is_some() {
                    TAG_OD_INDIVIDUAL
                } else {
                    TAG_INDIVIDUAL
                },
                self.p_idx,
                self.rep,
            ],
        );
        let mut verdicts = LabelVector::zeros(n);
        match self.od {
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for i in 0..n {
                    if self.item_model.test(labels.get(i) == 1, &mut rng) {
                        verdicts.set(i, 1);
                    }
                }
            }
            Some(od) => {
                let mut gen = FeatureGenerator::new(SyntheticFeatureConfig {
                    seed,
                    ..self.cfg.outlier.features.clone()
                })?;
                for i in 0..n {
                    let feature = gen.item_feature(labels.get(i) == 1);
                    if od.item_hist.label_pool(od.item_gmm.nlpd(&feature)) > 0 {
                        verdicts.set(i, 1);
                    }
                }
            }
        }
        let mut counts = ConfusionCounts::default();
        counts.accumulate(labels, &verdicts)?;
        Ok(MethodOutcome {
            counts,
            tests_used: n as u64,
            cost_per_item: self.cfg.cost.individual(),
            failed_chunks: 0,
            nonoptimal_chunks: 0,
            verdict_lines: vec![verdicts.to_line()],
        })
    }
}

fn sample_confusion_row(cm: &ConfusionModel, row: usize, rng: &mut ChaCha8Rng) -> u32 {
    use rand::Rng;
    let mut x: f64 = rng.gen();
    for (s, &p) in cm.row(row).iter().enumerate() {
        x -= p;
        if x < 0.0 {
            return s as u32;
        }
    }
    (cm.size() - 1) as u32
}

/// FNV-1a digest of a byte stream, for manifest provenance entries.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn format_rate(rate: Option<f64>) -> String {
    match rate {
        Some(v) => format!("{v:.6}"),
        None => "na".to_string(),
    }
}

/// Render the result rows as CSV, bit-stable for a fixed config and seed.
pub fn render_csv(report: &MetricsReport) -> String {
    let mut out = String::from(
        "method,p,seed,sensitivity,specificity,cost_per_item,tests_used,wall_seconds\n",
    );
    for row in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.6},{},{:.3}",
            row.method,
            row.prevalence,
            row.seed,
            format_rate(row.sensitivity),
            format_rate(row.specificity),
            row.cost_per_item,
            row.tests_used,
            row.wall_seconds,
        );
    }
    out
}

/// Run the sweep and write `results.csv` plus `manifest.json` (and verdict
/// dumps when enabled) under `out_dir`. Returns the two file paths.
pub fn sweep_and_emit(
    cfg: &ExperimentConfig,
    mode: Mode,
    out_dir: &Path,
) -> Result<(PathBuf, PathBuf)> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let report = run_experiment_inner(cfg, mode, Some(out_dir))?;
    let csv_path = out_dir.join("results.csv");
    std::fs::write(&csv_path, render_csv(&report)).map_err(|e| Error::io(&csv_path, e))?;
    let manifest = RunManifest::new("experiment", cfg, mode, &report)?;
    let manifest_path = out_dir.join("manifest.json");
    std::fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::Parse(format!("manifest serialization failed: {e}")))?,
    )
    .map_err(|e| Error::io(&manifest_path, e))?;
    Ok((csv_path, manifest_path))
}

/// Provenance record emitted next to every result file.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    pub mode: Mode,
    pub master_seed: u64,
    pub repeat_seeds: Vec<u64>,
    pub config: ExperimentConfig,
    pub input_digests: Vec<(String, String)>,
    pub od_scoring_cost_per_item: Option<f64>,
}

impl RunManifest {
    pub fn new(
        subcommand: &str,
        cfg: &ExperimentConfig,
        mode: Mode,
        report: &MetricsReport,
    ) -> Result<Self> {
        let mut digests = Vec::new();
        if let Some(path) = &cfg.oracle.confusion_csv {
            let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            digests.push((
                path.display().to_string(),
                format!("fnv1a64:{:016x}", fnv1a64(&bytes)),
            ));
        }
        Ok(RunManifest {
            subcommand: subcommand.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            mode,
            master_seed: cfg.master_seed,
            repeat_seeds: (0..cfg.repeats)
                .map(|rep| derive_seed(cfg.master_seed, &[TAG_REPEAT, rep as u64]))
                .collect(),
            config: cfg.clone(),
            input_digests: digests,
            od_scoring_cost_per_item: report.od_scoring_cost_per_item,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::compute_metrics;

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            population: PopulationConfig {
                size: 1000,
                prevalences: vec![0.003],
                mode: SamplingMode::FixedCount,
            },
            methods: vec![Method::Comp, Method::Mip],
            repeats: 1,
            master_seed: 7,
            ..ExperimentConfig::default()
        }
    }

    fn temp_dir(tag: &str) -> PathBuf {
        let dir =
            std::env::temp_dir().join(format!("poolscreen-harness-{tag}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        dir
    }

    #[test]
    fn noiseless_mip_on_sparse_chunks_is_perfect() {
        let mut cfg = tiny_config();
        // Identity oracle: correct_prob 1 collapses the tridiagonal model.
        cfg.oracle.correct_prob = 1.0;
        cfg.decoder.config.lambda = 0.01;
        let report = run_experiment(&cfg, Mode::Classification).unwrap();
        for row in &report.rows {
            assert_eq!(row.sensitivity, Some(1.0), "{}", row.method);
            assert_eq!(row.specificity, Some(1.0), "{}", row.method);
            assert_eq!(row.counts.total(), 1000);
        }
    }

    #[test]
    fn zero_prevalence_reports_na_sensitivity() {
        let mut cfg = tiny_config();
        cfg.population.prevalences = vec![0.0];
        cfg.oracle.correct_prob = 1.0;
        let report = run_experiment(&cfg, Mode::Classification).unwrap();
        for row in &report.rows {
            assert_eq!(row.sensitivity, None);
            assert_eq!(row.specificity, Some(1.0));
        }
        let csv = render_csv(&report);
        assert!(csv.contains(",na,"));
    }

    #[test]
    fn short_final_chunk_padding_is_excluded_from_metrics() {
        let mut cfg = tiny_config();
        cfg.population.size = 950;
        cfg.oracle.correct_prob = 1.0;
        let report = run_experiment(&cfg, Mode::Classification).unwrap();
        for row in &report.rows {
            assert_eq!(row.counts.total(), 950, "{}", row.method);
            // 10 chunks of the 100-column matrix, the last one padded.
            assert_eq!(row.tests_used, 10 * 50);
        }
    }

    #[test]
    fn sweep_is_byte_identical_across_reruns() {
        let mut cfg = tiny_config();
        cfg.methods = vec![
            Method::Comp,
            Method::Ncomp,
            Method::Dorfman,
            Method::Individual,
        ];
        cfg.population.prevalences = vec![0.0, 0.01];
        let dir_a = temp_dir("det-a");
        let dir_b = temp_dir("det-b");
        let (csv_a, _) = sweep_and_emit(&cfg, Mode::Classification, &dir_a).unwrap();
        let (csv_b, _) = sweep_and_emit(&cfg, Mode::Classification, &dir_b).unwrap();
        let a = std::fs::read(&csv_a).unwrap();
        let b = std::fs::read(&csv_b).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b);
        let _ = std::fs::remove_dir_all(dir_a);
        let _ = std::fs::remove_dir_all(dir_b);
    }

    #[test]
    fn row_count_matches_methods_times_prevalences_times_repeats() {
        let mut cfg = tiny_config();
        cfg.methods = vec![Method::Comp, Method::Classo];
        cfg.population.prevalences = vec![0.0, 0.005, 0.01];
        cfg.repeats = 2;
        let report = run_experiment(&cfg, Mode::Classification).unwrap();
        assert_eq!(report.rows.len(), 2 * 3 * 2);
    }

    #[test]
    fn default_sweep_emits_nine_prevalences_and_54_rows_per_repeat() {
        let mut cfg = ExperimentConfig::default();
        cfg.population.size = 500;
        cfg.master_seed = 13;
        let report = run_experiment(&cfg, Mode::Classification).unwrap();
        assert_eq!(report.rows.len(), 54);
        let mut seen: Vec<f64> = report.rows.iter().map(|r| r.prevalence).collect();
        seen.dedup();
        assert_eq!(seen, DEFAULT_PREVALENCES.to_vec());
        let csv = render_csv(&report);
        for p in [
            "0.001", "0.002", "0.005", "0.01", "0.02", "0.03", "0.04", "0.05", "0.1",
        ] {
            assert!(csv.contains(&format!(",{p},")), "missing p={p} in CSV");
        }
    }

    #[test]
    fn metrics_recomputable_from_verdict_dump() {
        let mut cfg = tiny_config();
        cfg.methods = vec![Method::Classo];
        cfg.dump_verdicts = true;
        cfg.population.size = 500;
        let dir = temp_dir("dump");
        let _ = sweep_and_emit(&cfg, Mode::Classification, &dir).unwrap();
        let report = run_experiment(&cfg, Mode::Classification).unwrap();
        let row = &report.rows[0];
        // Re-derive the population and compare against the dumped verdicts.
        let population = sample_population(
            cfg.population.size,
            row.prevalence,
            cfg.population.mode,
            derive_seed(cfg.master_seed, &[TAG_POPULATION, 0, 0]),
        )
        .unwrap();
        let dump_path = dir.join(format!("verdicts_{}_{}_0.txt", row.method, row.prevalence));
        let text = std::fs::read_to_string(&dump_path).unwrap();
        let mut verdict_bits = Vec::new();
        for line in text.lines() {
            verdict_bits.extend(
                LabelVector::from_line(line)
                    .unwrap()
                    .as_slice()
                    .iter()
                    .copied(),
            );
        }
        let verdicts = LabelVector::from_bits(verdict_bits).unwrap();
        let (sens, spec) = compute_metrics(population.labels(), &verdicts).unwrap();
        assert_eq!(sens, row.sensitivity);
        assert_eq!(spec, row.specificity);
        let _ = std::fs::remove_dir_all(dir);
    }

    #[test]
    fn outlier_mode_runs_end_to_end() {
        let mut cfg = tiny_config();
        cfg.methods = vec![
            Method::Comp,
            Method::Ncomp,
            Method::Mip,
            Method::Classo,
            Method::Dorfman,
            Method::Individual,
        ];
        cfg.population.size = 600;
        cfg.population.prevalences = vec![0.01];
        cfg.outlier = OutlierConfig {
            features: SyntheticFeatureConfig {
                dim: 8,
                separation: 40.0,
                ..SyntheticFeatureConfig::default()
            },
            gmm_train_pools: 400,
            calibration_pools_per_label: 200,
            bins: 100,
            item_calibration_per_label: 200,
            item_bins: 100,
            ..OutlierConfig::default()
        };
        let report = run_experiment(&cfg, Mode::Outlier).unwrap();
        assert_eq!(
            report.od_scoring_cost_per_item,
            Some(cfg.cost.od_score_cost)
        );
        for row in &report.rows {
            assert!(row.method.ends_with("-od"), "{}", row.method);
            // Widely separated synthetic features: verdicts track the truth.
            assert_eq!(row.sensitivity, Some(1.0), "{}", row.method);
            assert!(row.specificity.unwrap() >= 0.99, "{}", row.method);
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = tiny_config();
        cfg.methods.clear();
        assert!(run_experiment(&cfg, Mode::Classification).is_err());
        let mut cfg = tiny_config();
        cfg.population.prevalences = vec![1.5];
        assert!(cfg.validate().is_err());
        let mut cfg = tiny_config();
        cfg.repeats = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = tiny_config();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let restored = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(restored.population.size, cfg.population.size);
        assert_eq!(restored.methods, cfg.methods);
        assert_eq!(restored.decoder.config.lambda, cfg.decoder.config.lambda);
    }
}
