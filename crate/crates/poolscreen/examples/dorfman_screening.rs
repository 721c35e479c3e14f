//! Two-round Dorfman screening: pooled first pass, individual retests of
//! flagged groups, and the square-root rule for the group size.
//!
//! ```bash
//! cargo run --release --example dorfman_screening
//! ```

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use poolscreen::cost::CostModel;
use poolscreen::decode::{dorfman_decode, optimal_dorfman_pool_size};
use poolscreen::metrics::compute_metrics;
use poolscreen::oracle::{sample_population, BinaryTestModel, ConfusionModel, SamplingMode};

fn main() {
    let n = 10_000;
    let prevalence = 0.01;
    let expected_defectives = (n as f64 * prevalence).round() as usize;
    let g = optimal_dorfman_pool_size(n, expected_defectives);
    println!(
        "n = {n}, expected defectives = {expected_defectives}: square-root rule gives g = {g}"
    );

    let population = sample_population(n, prevalence, SamplingMode::FixedCount, 3).unwrap();
    let labels = population.labels().clone();

    // Perfect oracles first: exact recovery, test count far below n.
    let truth = labels.clone();
    let plan = dorfman_decode(
        n,
        g,
        |group| group.iter().any(|&i| truth.get(i) == 1),
        |i| truth.get(i) == 1,
    );
    println!(
        "perfect oracles: {} tests ({} round-1 + {} retests) for {} items, exact: {}",
        plan.tests_used(),
        plan.round1_tests,
        plan.round2_tests,
        n,
        plan.verdicts == labels
    );

    // Noisy oracles: pool tests threshold a miscounted report, item tests
    // follow a 2x2 error model.
    let confusion = ConfusionModel::tridiagonal(g, 0.9, 0).unwrap();
    let item_model = BinaryTestModel::new(0.05, 0.05).unwrap();
    let mut pool_rng = ChaCha8Rng::seed_from_u64(11);
    let mut item_rng = ChaCha8Rng::seed_from_u64(12);
    let truth = labels.clone();
    let plan = dorfman_decode(
        n,
        g,
        |group| {
            let count: usize = group.iter().map(|&i| truth.get(i) as usize).sum();
            let row = count.min(g);
            // Draw a noisy count and threshold it.
            let mut x: f64 = pool_rng.gen();
            let mut reported = g;
            for (s, &p) in confusion.row(row).iter().enumerate() {
                x -= p;
                if x < 0.0 {
                    reported = s;
                    break;
                }
            }
            reported > 0
        },
        |i| item_model.test(truth.get(i) == 1, &mut item_rng),
    );
    let (sens, spec) = compute_metrics(&labels, &plan.verdicts).unwrap();
    println!(
        "noisy oracles:   {} tests, sensitivity {:.4}, specificity {:.4}",
        plan.tests_used(),
        sens.unwrap(),
        spec.unwrap()
    );

    let cost = CostModel::default();
    let retest_fraction = plan.round2_tests as f64 / n as f64;
    println!(
        "modeled cost per item: {:.4} (vs 1.0 individual, {:.4} non-adaptive 50/100 pooling)",
        cost.dorfman_observed(g, retest_fraction),
        cost.nonadaptive(50, 100),
    );
}
