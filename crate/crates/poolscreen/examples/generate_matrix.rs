//! Construct a balanced pooling matrix and certify its combinatorial
//! properties.
//!
//! ```bash
//! cargo run --release --example generate_matrix
//! ```

use poolscreen::matrix::{erdos_cardinality_bound, qgt_lower_bound, CertifyOptions, PoolingMatrix};

fn main() {
    // The screening geometry used throughout the examples: 100 items per
    // chunk, 50 pools, 8 items per pool, each item in 4 pools.
    let matrix = PoolingMatrix::construct_balanced(100, 50, 8, 4, 0).expect("feasible parameters");
    println!(
        "constructed {}x{} matrix, row weight {}, column weight {} (n*c = m*r = {})",
        matrix.m(),
        matrix.n(),
        matrix.r(),
        matrix.c(),
        matrix.n() * matrix.c()
    );
    println!("balanced: {}", matrix.verify_balanced());

    let certificate = matrix
        .certify(&CertifyOptions {
            disjunct: Some(3),
            rip1_k: Some(2),
            ..CertifyOptions::default()
        })
        .expect("certification");
    println!("{}", serde_json::to_string_pretty(&certificate).unwrap());

    // How many weight-4 columns could any 50-row matrix carry while staying
    // 3-disjunct? Our 100 columns sit well inside the bound.
    let bound = erdos_cardinality_bound(50, 4, 3);
    println!("cardinality bound for 3-disjunct weight-4 columns on 50 rows: {bound}");

    // Counting lower bounds on the number of tests, binary vs quantitative.
    println!("test-count lower bounds for n=100:");
    for k in [1usize, 2, 4, 8] {
        println!(
            "  k={k}: binary {:>3}, quantitative {:>3}",
            qgt_lower_bound(100, k, false),
            qgt_lower_bound(100, k, true)
        );
    }

    let path = std::env::temp_dir().join("poolscreen-example-matrix.txt");
    matrix.save(&path).expect("write matrix");
    println!("canonical text form written to {}", path.display());
}
