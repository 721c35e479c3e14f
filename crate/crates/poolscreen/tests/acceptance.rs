//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured evidence.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use poolscreen::cost::CostModel;
use poolscreen::decode::{
    classo_decode, comp_decode, dorfman_decode, mip_decode, ncomp_decode, DecoderConfig,
};
use poolscreen::features::{FeatureGenerator, SyntheticFeatureConfig};
use poolscreen::gmm::{fit_gmm, FitOptions};
use poolscreen::harness::{
    run_experiment, sweep_and_emit, ExperimentConfig, Method, Mode, PopulationConfig,
    DEFAULT_PREVALENCES,
};
use poolscreen::histogram::build_histogram;
use poolscreen::matrix::{qgt_lower_bound, PoolingMatrix};
use poolscreen::oracle::{exact_counts, ConfusionModel, CountVector, LabelVector, SamplingMode};

fn standard_matrix() -> PoolingMatrix {
    PoolingMatrix::construct_balanced(100, 50, 8, 4, 0).unwrap()
}

fn random_sparse_labels(rng: &mut ChaCha8Rng, n: usize, max_ones: usize) -> LabelVector {
    let k = rng.gen_range(0..=max_ones);
    let mut support = Vec::with_capacity(k);
    while support.len() < k {
        let i = rng.gen_range(0..n);
        if !support.contains(&i) {
            support.push(i);
        }
    }
    LabelVector::from_support(n, &support)
}

/// Criterion 1: noiseless exact recovery on the 50x100 matrix for 1,000
/// random vectors with at most 3 ones, via COMP, MIP (lambda = 0), and
/// CLasso (small lambda, tau = 0.5). Zero errors tolerated, under 60 s.
#[test]
fn acceptance_01_exact_noiseless_recovery() {
    let started = Instant::now();
    let matrix = standard_matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC1);
    let mip_cfg = DecoderConfig::default().with_lambda(0.0);
    let classo_cfg = DecoderConfig::default().with_lambda(0.01).with_tau(0.5);
    for trial in 0..1000 {
        let truth = random_sparse_labels(&mut rng, 100, 3);
        let counts = exact_counts(&matrix, &truth).unwrap();
        let comp = comp_decode(&matrix, &counts.binarize()).unwrap();
        assert_eq!(comp, truth, "COMP failed at trial {trial}");
        let mip = mip_decode(&matrix, &counts, &mip_cfg).unwrap();
        assert!(mip.optimal, "MIP budget at trial {trial}");
        assert_eq!(mip.verdicts, truth, "MIP failed at trial {trial}");
        let classo = classo_decode(&matrix, &counts, &classo_cfg).unwrap();
        assert_eq!(classo.verdicts, truth, "CLasso failed at trial {trial}");
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}");
    println!(
        "ACCEPTANCE 1 (exact noiseless recovery, 1000 trials x 3 decoders): PASS in {elapsed:.2?}"
    );
}

/// Criterion 2: branch-and-bound objective equals exhaustive 2^n enumeration
/// on 200 random instances with n <= 20, exact match, under 120 s.
#[test]
fn acceptance_02_mip_global_optimality() {
    let started = Instant::now();
    // Feasible small balanced shapes (n, m, r, c).
    let shapes = [
        (12usize, 8usize, 3usize, 2usize),
        (16, 8, 4, 2),
        (20, 10, 4, 2),
        (18, 12, 3, 2),
        (20, 15, 4, 3),
        (9, 6, 3, 2),
        (16, 12, 4, 3),
    ];
    let grid = [0.001, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0];
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC2);
    for trial in 0..200u64 {
        let (n, m, r, c) = shapes[rng.gen_range(0..shapes.len())];
        let matrix = PoolingMatrix::construct_balanced(n, m, r, c, trial).unwrap();
        let y: Vec<u32> = (0..m).map(|_| rng.gen_range(0..=r as u32)).collect();
        let lambda = grid[rng.gen_range(0..grid.len())];
        let sol = mip_decode(
            &matrix,
            &CountVector::new(y.clone()),
            &DecoderConfig {
                lambda,
                max_nodes: 10_000_000,
                ..DecoderConfig::default()
            },
        )
        .unwrap();
        assert!(sol.optimal, "trial {trial} hit the node budget");
        // Independent oracle: visit all 2^n binary vectors in Gray-code
        // order, maintaining exact integer pool sums (one item flips per
        // step). Every term is an exactly representable integer, so the
        // objective values are bit-identical to any other evaluation order.
        let mut sums = vec![0i64; m];
        let mut included = vec![false; n];
        let mut ones = 0i64;
        let mut best = {
            let residual: i64 = y.iter().map(|&v| (v as i64) * (v as i64)).sum();
            residual as f64
        };
        for g in 1u64..(1u64 << n) {
            let flip = g.trailing_zeros() as usize;
            let delta: i64 = if included[flip] { -1 } else { 1 };
            included[flip] = !included[flip];
            ones += delta;
            for &q in matrix.item_pools(flip) {
                sums[q as usize] += delta;
            }
            let mut residual = 0i64;
            for q in 0..m {
                let diff = y[q] as i64 - sums[q];
                residual += diff * diff;
            }
            let obj = residual as f64 + lambda * ones as f64;
            if obj < best {
                best = obj;
            }
        }
        assert_eq!(
            sol.objective, best,
            "trial {trial}: shape ({n},{m},{r},{c}), lambda {lambda}"
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 120, "took {elapsed:?}");
    println!("ACCEPTANCE 2 (MIP matches 2^n enumeration on 200 instances): PASS in {elapsed:.2?}");
}

/// Criterion 3: Dorfman with perfect oracles, n=100, k=1, g=10 uses at most
/// 2*sqrt(n*k) = 20 tests in every one of 1,000 trials, and the expected test
/// count approaches ceil(n/g) = 10 as prevalence vanishes.
#[test]
fn acceptance_03_dorfman_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC3);
    for _ in 0..1000 {
        let pos = rng.gen_range(0..100);
        let truth = LabelVector::from_support(100, &[pos]);
        let t = truth.clone();
        let plan = dorfman_decode(
            100,
            10,
            |group| group.iter().any(|&i| t.get(i) == 1),
            |i| t.get(i) == 1,
        );
        assert!(plan.tests_used() <= 20, "{} tests", plan.tests_used());
        assert_eq!(plan.verdicts, truth);
    }
    // Vanishing prevalence: each item positive with p = 1e-4.
    let trials = 5000;
    let mut total_tests = 0usize;
    for _ in 0..trials {
        let bits: Vec<u8> = (0..100)
            .map(|_| u8::from(rng.gen::<f64>() < 1e-4))
            .collect();
        let truth = LabelVector::from_bits(bits).unwrap();
        let t = truth.clone();
        let plan = dorfman_decode(
            100,
            10,
            |group| group.iter().any(|&i| t.get(i) == 1),
            |i| t.get(i) == 1,
        );
        total_tests += plan.tests_used();
    }
    let mean = total_tests as f64 / trials as f64;
    assert!((10.0..10.2).contains(&mean), "mean tests {mean}");
    println!(
        "ACCEPTANCE 3 (Dorfman bound: <=20 tests always; mean {mean:.3} -> ceil(n/g)=10): PASS"
    );
}

/// Criterion 4: on the c=4 matrix with a single defective and any one of its
/// four pool outcomes flipped to negative, NCOMP-2 still flags the defective
/// in every enumerated case.
#[test]
fn acceptance_04_ncomp_noise_tolerance() {
    let matrix = standard_matrix();
    let mut cases = 0;
    for item in 0..100 {
        let truth = LabelVector::from_support(100, &[item]);
        let clean = exact_counts(&matrix, &truth).unwrap().binarize();
        for &q in matrix.item_pools(item) {
            let mut outcomes = clean.clone();
            outcomes[q as usize] = 0;
            let verdicts = ncomp_decode(&matrix, &outcomes, 2).unwrap();
            assert_eq!(
                verdicts.get(item),
                1,
                "missed item {item} with pool {q} flipped"
            );
            cases += 1;
        }
    }
    assert_eq!(cases, 400);
    println!("ACCEPTANCE 4 (NCOMP-2 survives any single flipped pool, {cases} cases): PASS");
}

/// Criterion 5: trend reproduction with the default tridiagonal confusion
/// model, N = 100,000, 10 seeds.
///   (a) CLasso and MIP sensitivity strictly above COMP and Dorfman-8 at
///       p in {0.001, 0.002, 0.005, 0.01} in at least 9/10 seeds;
///   (b) COMP specificity at p=0.1 strictly below MIP's in at least 9/10;
///   (c) NCOMP-2 specificity at p=0.1 below COMP's in at least 9/10.
/// Runtime budget: 30 minutes.
#[test]
fn acceptance_05_trend_reproduction() {
    let started = Instant::now();
    let cfg = ExperimentConfig {
        population: PopulationConfig {
            size: 100_000,
            prevalences: vec![0.001, 0.002, 0.005, 0.01, 0.1],
            mode: SamplingMode::FixedCount,
        },
        methods: vec![
            Method::Comp,
            Method::Ncomp,
            Method::Dorfman,
            Method::Mip,
            Method::Classo,
        ],
        repeats: 10,
        master_seed: 2024,
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&cfg, Mode::Classification).unwrap();
    let get = |method: &str, p: f64, rep_seed: u64| -> (f64, f64) {
        let row = report
            .rows
            .iter()
            .find(|r| r.method == method && r.prevalence == p && r.seed == rep_seed)
            .unwrap_or_else(|| panic!("missing row {method} p={p}"));
        (
            row.sensitivity.unwrap_or(f64::NAN),
            row.specificity.unwrap_or(f64::NAN),
        )
    };
    let seeds: Vec<u64> = {
        let mut s: Vec<u64> = report.rows.iter().map(|r| r.seed).collect();
        s.sort_unstable();
        s.dedup();
        s
    };
    assert_eq!(seeds.len(), 10);

    // (a) sensitivity ordering at low prevalence.
    let mut min_wins_a = 10usize;
    for &p in &[0.001, 0.002, 0.005, 0.01] {
        for quant in ["classo", "mip"] {
            for baseline in ["comp", "dorfman-8"] {
                let wins = seeds
                    .iter()
                    .filter(|&&s| get(quant, p, s).0 > get(baseline, p, s).0)
                    .count();
                assert!(
                    wins >= 9,
                    "(a) {quant} > {baseline} sensitivity at p={p}: only {wins}/10 seeds"
                );
                min_wins_a = min_wins_a.min(wins);
            }
        }
    }
    // (b) specificity: COMP below MIP at p = 0.1.
    let wins_b = seeds
        .iter()
        .filter(|&&s| get("comp", 0.1, s).1 < get("mip", 0.1, s).1)
        .count();
    assert!(
        wins_b >= 9,
        "(b) comp < mip specificity at p=0.1: {wins_b}/10"
    );
    // (c) specificity: NCOMP-2 below COMP at p = 0.1.
    let wins_c = seeds
        .iter()
        .filter(|&&s| get("ncomp-2", 0.1, s).1 < get("comp", 0.1, s).1)
        .count();
    assert!(
        wins_c >= 9,
        "(c) ncomp-2 < comp specificity at p=0.1: {wins_c}/10"
    );

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 1800, "took {elapsed:?}");
    println!(
        "ACCEPTANCE 5 (trend reproduction, N=100k, 10 seeds; (a) worst {min_wins_a}/10, (b) {wins_b}/10, (c) {wins_c}/10): PASS in {elapsed:.2?}"
    );
}

/// Criterion 6: cost model hits the published 61% figure at m/n = 1/2 with
/// alpha = 0.22, and the modeled two-round cost rises monotonically across
/// the nine-point prevalence sweep.
#[test]
fn acceptance_06_cost_model() {
    let cost = CostModel {
        alpha: 0.22,
        ..CostModel::default()
    };
    let pooled = cost.nonadaptive(50, 100);
    assert!((pooled - 0.61).abs() <= 0.005, "got {pooled}");
    let cm = ConfusionModel::tridiagonal(8, 0.9, 0).unwrap();
    let mut last = f64::NEG_INFINITY;
    for &p in DEFAULT_PREVALENCES.iter() {
        let c = cost.dorfman_modeled(8, p, &cm);
        assert!(c > last, "Dorfman cost not increasing at p={p}");
        last = c;
    }
    println!(
        "ACCEPTANCE 6 (cost model: non-adaptive {pooled:.4} within 0.61 +/- 0.005; Dorfman cost monotone over 9-point sweep): PASS"
    );
}

/// Criterion 7: EM log-likelihood is monotone non-decreasing (per iteration,
/// 100 random datasets) and the K=1 fit matches the sample mean / floored
/// sample covariance to 1e-8.
#[test]
fn acceptance_07_em_correctness() {
    use rand_distr::{Distribution, Normal};
    let mut outer = ChaCha8Rng::seed_from_u64(0xACC7);
    for dataset in 0..100u64 {
        let d = outer.gen_range(1..=4usize);
        let k = outer.gen_range(1..=3usize);
        let n = outer.gen_range(60..=250usize);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            let cluster = outer.gen_range(0..k) as f64;
            data.push(
                (0..d)
                    .map(|_| cluster * 3.0 + normal.sample(&mut outer))
                    .collect::<Vec<f64>>(),
            );
        }
        let fit = fit_gmm(
            &data,
            k,
            &FitOptions {
                seed: dataset,
                ..FitOptions::default()
            },
        )
        .unwrap_or_else(|e| panic!("dataset {dataset}: {e}"));
        for w in fit.log_likelihood.windows(2) {
            assert!(
                w[1] >= w[0] - 1e-8 * (1.0 + w[0].abs()),
                "dataset {dataset}: log-likelihood dropped {} -> {}",
                w[0],
                w[1]
            );
        }
    }
    // K = 1 closed form.
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC8);
    let normal = Normal::new(0.0, 1.7).unwrap();
    let data: Vec<Vec<f64>> = (0..500)
        .map(|_| (0..3).map(|_| 1.5 + normal.sample(&mut rng)).collect())
        .collect();
    let fit = fit_gmm(&data, 1, &FitOptions::default()).unwrap();
    let n = data.len() as f64;
    let mut mean = [0.0; 3];
    for x in &data {
        for t in 0..3 {
            mean[t] += x[t] / n;
        }
    }
    let mut cov = [0.0; 9];
    for x in &data {
        for r in 0..3 {
            for c in 0..3 {
                cov[r * 3 + c] += (x[r] - mean[r]) * (x[c] - mean[c]) / n;
            }
        }
    }
    let trace: f64 = cov[0] + cov[4] + cov[8];
    let floor = 1e-6 * trace / 3.0;
    for t in 0..3 {
        assert!((fit.model.means()[0][t] - mean[t]).abs() < 1e-8);
    }
    let fitted = fit.model.covariance(0);
    for r in 0..3 {
        for c in 0..3 {
            let expected = cov[r * 3 + c] + if r == c { floor } else { 0.0 };
            assert!((fitted[r * 3 + c] - expected).abs() < 1e-8);
        }
    }
    println!("ACCEPTANCE 7 (EM monotone on 100 datasets; K=1 closed form to 1e-8): PASS");
}

/// Criterion 8: histogram labeler boundary and tie rules hold exactly, and
/// on calibrated synthetic features the empirical pool-label confusion
/// matrix over 10,000 pools carries at least 95% of its mass on the
/// tridiagonal band.
#[test]
fn acceptance_08_histogram_labeler() {
    // Boundary rules.
    let calib = vec![(1.0, 1), (2.0, 2), (3.0, 3)];
    let hist = build_histogram(&calib, 10, 5).unwrap();
    assert_eq!(hist.label_pool(0.5), 0, "score below s_min must label 0");
    assert_eq!(hist.label_pool(3.5), 5, "score above s_max must label t");
    // Equidistant empty bin takes the larger-index neighbor.
    let tie = build_histogram(&[(0.5, 1), (4.5, 2)], 5, 5).unwrap();
    assert_eq!(tie.bin_label(2), 2);

    // Calibrated synthetic pipeline, Q=500 bins, t=5, 10k test pools.
    let feature_cfg = SyntheticFeatureConfig {
        seed: 0x8888,
        ..Default::default()
    };
    let t = feature_cfg.max_count;
    let mut gen = FeatureGenerator::new(feature_cfg).unwrap();
    let clean: Vec<Vec<f64>> = (0..3000).map(|_| gen.pool_feature(0)).collect();
    let gmm = fit_gmm(
        &clean,
        2,
        &FitOptions {
            seed: 0x8888,
            ..FitOptions::default()
        },
    )
    .unwrap()
    .model;
    let mut calib = Vec::new();
    for label in 0..=t {
        for _ in 0..1500 {
            calib.push((gmm.nlpd(&gen.pool_feature(label)), label));
        }
    }
    let hist = build_histogram(&calib, 500, t).unwrap();
    let mut confusion = vec![vec![0u64; t + 1]; t + 1];
    let mut band = 0u64;
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC9);
    let pools = 10_000;
    for _ in 0..pools {
        let truth = rng.gen_range(0..=t);
        let predicted = hist.label_pool(gmm.nlpd(&gen.pool_feature(truth)));
        confusion[truth][predicted] += 1;
        if truth.abs_diff(predicted) <= 1 {
            band += 1;
        }
    }
    let band_mass = band as f64 / pools as f64;
    assert!(band_mass >= 0.95, "tridiagonal band mass {band_mass}");
    println!(
        "ACCEPTANCE 8 (histogram boundary/tie rules; band mass {band_mass:.4} >= 0.95 over 10k pools): PASS"
    );
}

/// Criterion 9: the 50-pool budget covers the quantitative lower bound for
/// all k <= 8 on n=100 items, and the binary bound first exceeds 50 at the
/// reported k.
#[test]
fn acceptance_09_lower_bound_consistency() {
    for k in 1..=8 {
        let bound = qgt_lower_bound(100, k, true);
        assert!(
            50 >= bound,
            "quantitative bound {bound} exceeds 50 pools at k={k}"
        );
    }
    let crossover = (1..=100)
        .find(|&k| qgt_lower_bound(100, k, false) > 50)
        .expect("binary bound must cross 50");
    assert!(qgt_lower_bound(100, crossover - 1, false) <= 50);
    println!(
        "ACCEPTANCE 9 (m=50 >= QGT bound for k<=8; binary bound exceeds 50 first at k={crossover}): PASS"
    );
}

/// Criterion 10: identical config and master seed produce byte-identical CSV.
#[test]
fn acceptance_10_determinism() {
    let cfg = ExperimentConfig {
        population: PopulationConfig {
            size: 5_000,
            prevalences: vec![0.0, 0.01, 0.05],
            mode: SamplingMode::FixedCount,
        },
        repeats: 2,
        master_seed: 99,
        ..ExperimentConfig::default()
    };
    let base = std::env::temp_dir().join(format!("poolscreen-acc10-{}", std::process::id()));
    let dir_a = base.join("a");
    let dir_b = base.join("b");
    let (csv_a, _) = sweep_and_emit(&cfg, Mode::Classification, &dir_a).unwrap();
    let (csv_b, _) = sweep_and_emit(&cfg, Mode::Classification, &dir_b).unwrap();
    let a = std::fs::read(&csv_a).unwrap();
    let b = std::fs::read(&csv_b).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "CSV outputs differ between identical reruns");
    // Outlier mode is held to the same bar.
    let mut od_cfg = cfg.clone();
    od_cfg.population.size = 1_000;
    od_cfg.population.prevalences = vec![0.01];
    od_cfg.methods = vec![Method::Comp, Method::Classo];
    od_cfg.outlier.features.dim = 8;
    od_cfg.outlier.gmm_train_pools = 300;
    od_cfg.outlier.calibration_pools_per_label = 150;
    od_cfg.outlier.item_calibration_per_label = 150;
    let (od_a, _) = sweep_and_emit(&od_cfg, Mode::Outlier, &base.join("od-a")).unwrap();
    let (od_b, _) = sweep_and_emit(&od_cfg, Mode::Outlier, &base.join("od-b")).unwrap();
    assert_eq!(std::fs::read(&od_a).unwrap(), std::fs::read(&od_b).unwrap());
    let _ = std::fs::remove_dir_all(base);
    println!("ACCEPTANCE 10 (byte-identical CSV across reruns, classification + outlier): PASS");
}
