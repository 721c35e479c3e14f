//! Per-item computational cost across the prevalence sweep: individual
//! testing stays flat at 1, non-adaptive pooling stays flat below it, and
//! two-round testing climbs with prevalence as more groups need retests.
//!
//! ```bash
//! cargo run --release --example cost_model
//! ```

use poolscreen::cost::CostModel;
use poolscreen::harness::DEFAULT_PREVALENCES;
use poolscreen::oracle::ConfusionModel;

fn main() {
    let cost = CostModel::default();
    let confusion = ConfusionModel::tridiagonal(8, 0.9, 0).unwrap();
    println!(
        "early-stage fraction alpha = {}, pooled geometry 50 pools / 100 items",
        cost.alpha
    );
    println!(
        "non-adaptive pooled cost per item: {:.4} (the 61% point)",
        cost.nonadaptive(50, 100)
    );
    println!();
    println!(
        "{:>8} {:>12} {:>12} {:>12}",
        "p", "individual", "pooled", "dorfman-8"
    );
    for &p in DEFAULT_PREVALENCES.iter() {
        println!(
            "{:>8} {:>12.4} {:>12.4} {:>12.4}",
            p,
            cost.individual(),
            cost.nonadaptive(50, 100),
            cost.dorfman_modeled(8, p, &confusion)
        );
    }
    println!();
    println!("two-round testing beats non-adaptive pooling only at low prevalence;");
    println!("past a few percent the retest volume overtakes the pooled pass.");
}
