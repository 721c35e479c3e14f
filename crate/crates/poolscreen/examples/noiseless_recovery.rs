//! Exact recovery from noiseless pool counts: with at most `c-1` flagged
//! items, COMP, branch-and-bound, and box-constrained LASSO all return the
//! planted labels exactly.
//!
//! ```bash
//! cargo run --release --example noiseless_recovery
//! ```

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use poolscreen::decode::{classo_decode, comp_decode, mip_decode, DecoderConfig};
use poolscreen::matrix::PoolingMatrix;
use poolscreen::oracle::{exact_counts, LabelVector};

fn main() {
    let matrix = PoolingMatrix::construct_balanced(100, 50, 8, 4, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let trials = 200;
    let mut comp_ok = 0;
    let mut mip_ok = 0;
    let mut classo_ok = 0;
    let mip_cfg = DecoderConfig::default().with_lambda(0.0);
    let classo_cfg = DecoderConfig::default().with_lambda(0.01);
    for _ in 0..trials {
        let k = rng.gen_range(0..=3);
        let mut support = Vec::new();
        while support.len() < k {
            let i = rng.gen_range(0..100);
            if !support.contains(&i) {
                support.push(i);
            }
        }
        let truth = LabelVector::from_support(100, &support);
        let counts = exact_counts(&matrix, &truth).unwrap();

        comp_ok += usize::from(comp_decode(&matrix, &counts.binarize()).unwrap() == truth);
        mip_ok += usize::from(mip_decode(&matrix, &counts, &mip_cfg).unwrap().verdicts == truth);
        classo_ok += usize::from(
            classo_decode(&matrix, &counts, &classo_cfg)
                .unwrap()
                .verdicts
                == truth,
        );
    }
    println!("noiseless recovery over {trials} random populations with <= 3 flagged items:");
    println!("  COMP   {comp_ok}/{trials}");
    println!("  MIP    {mip_ok}/{trials}");
    println!("  CLasso {classo_ok}/{trials}");

    // One worked instance in detail.
    let truth = LabelVector::from_support(100, &[5, 40, 77]);
    let counts = exact_counts(&matrix, &truth).unwrap();
    println!("\nplanted items: {:?}", truth.support());
    println!("pool counts:   {}", counts.to_line());
    let decoded = mip_decode(&matrix, &counts, &mip_cfg).unwrap();
    println!(
        "MIP verdicts:  {:?} (objective {})",
        decoded.verdicts.support(),
        decoded.objective
    );
}
