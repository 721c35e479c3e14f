//! A miniature prevalence sweep through the experiment harness, emitting the
//! same results.csv and manifest.json the `experiment` subcommand writes.
//!
//! ```bash
//! cargo run --release --example prevalence_sweep
//! ```

use poolscreen::harness::{sweep_and_emit, ExperimentConfig, Method, Mode, PopulationConfig};
use poolscreen::oracle::SamplingMode;

fn main() {
    let cfg = ExperimentConfig {
        population: PopulationConfig {
            size: 20_000,
            prevalences: vec![0.001, 0.005, 0.02, 0.1],
            mode: SamplingMode::FixedCount,
        },
        methods: vec![
            Method::Comp,
            Method::Ncomp,
            Method::Dorfman,
            Method::Individual,
            Method::Mip,
            Method::Classo,
        ],
        repeats: 1,
        master_seed: 17,
        ..ExperimentConfig::default()
    };
    let out_dir = std::env::temp_dir().join("poolscreen-example-sweep");
    let (csv, manifest) = sweep_and_emit(&cfg, Mode::Classification, &out_dir).unwrap();
    println!("wrote {}", csv.display());
    println!("wrote {}", manifest.display());
    println!();
    print!("{}", std::fs::read_to_string(&csv).unwrap());
    println!();
    println!("rerunning with the same master seed reproduces this file byte for byte;");
    println!("the quantitative decoders hold sensitivity at low p where the binary");
    println!("baselines drop pools, and keep specificity at p = 0.1 where COMP saturates.");
}
