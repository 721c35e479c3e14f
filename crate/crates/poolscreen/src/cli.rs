//! Command-line surface: matrix generation/certification, single-chunk
//! decoding, and experiment sweeps.
//!
//! Exit codes: 0 success, 1 runtime failure (I/O, infeasible parameters,
//! dimension mismatch, invalid config), 2 matrix property-check failure,
//! 3 decoder budget exhaustion, 64 usage error.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::decode::{classo_decode, comp_decode, mip_decode, ncomp_decode, DecoderConfig};
use crate::error::Error;
use crate::harness::{fnv1a64, sweep_and_emit, ExperimentConfig, Mode};
use crate::matrix::{CertifyOptions, PoolingMatrix};
use crate::oracle::CountVector;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

const HELP: &str = "\
poolscreen - pooled screening via compressed sensing and group testing

USAGE:
    poolscreen <SUBCOMMAND> [FLAGS]

SUBCOMMANDS:
    matrix gen    --n N --m M --r R --c C --seed S --out FILE
                  Construct a balanced pooling matrix and write its canonical
                  text form (header `m n r c seed`, then 0/1 rows).
    matrix check  --in FILE [--disjunct D] [--rip1 K]
                  Verify the balance invariants and print a certificate as
                  JSON. Exits 2 when a checked property fails.
    decode        --matrix FILE (--counts FILE | --outcomes FILE)
                  --decoder comp|ncomp|mip|classo --out FILE
                  [--t T] [--lambda L] [--tau T] [--max-nodes N]
                  Decode one chunk of pool observations to a 0/1 verdict line.
    experiment    --config FILE --out DIR [--mode classification|outlier]
                  Run the configured sweep; writes results.csv + manifest.json.

Every subcommand is deterministic for fixed flags and seeds.
Run `poolscreen <SUBCOMMAND> --help` for details.
";

/// Entry point used by the binary; returns the process exit code.
pub fn run(args: &[String]) -> i32 {
    if args.is_empty() || args[0] == "--help" || args[0] == "-h" {
        print!("{HELP}");
        return EXIT_OK;
    }
    match args[0].as_str() {
        "matrix" => cmd_matrix(&args[1..]),
        "decode" => cmd_decode(&args[1..]),
        "experiment" => cmd_experiment(&args[1..]),
        other => usage(&format!("unknown subcommand {other:?}")),
    }
}

fn usage(message: &str) -> i32 {
    eprintln!("error: {message}");
    eprintln!("run `poolscreen --help` for usage");
    EXIT_USAGE
}

fn runtime(err: &Error) -> i32 {
    eprintln!("error: {err}");
    match err {
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        _ => EXIT_RUNTIME,
    }
}

/// `--name value` pairs; every flag takes exactly one value.
struct Flags {
    pairs: Vec<(String, String)>,
}

impl Flags {
    fn parse(args: &[String], allowed: &[&str]) -> Result<Option<Flags>, String> {
        let mut pairs = Vec::new();
        let mut it = args.iter();
        while let Some(arg) = it.next() {
            if arg == "--help" || arg == "-h" {
                return Ok(None);
            }
            let Some(name) = arg.strip_prefix("--") else {
                return Err(format!("unexpected argument {arg:?}"));
            };
            if !allowed.contains(&name) {
                return Err(format!("unknown flag --{name}"));
            }
            let Some(value) = it.next() else {
                return Err(format!("flag --{name} needs a value"));
            };
            pairs.push((name.to_string(), value.clone()));
        }
        Ok(Some(Flags { pairs }))
    }

    fn get(&self, name: &str) -> Option<&str> {
        self.pairs
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }

    fn require(&self, name: &str) -> Result<&str, String> {
        self.get(name)
            .ok_or_else(|| format!("missing required flag --{name}"))
    }

    fn parse_num<T: std::str::FromStr>(&self, name: &str) -> Result<Option<T>, String> {
        match self.get(name) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| format!("bad value {v:?} for --{name}")),
        }
    }

    fn require_num<T: std::str::FromStr>(&self, name: &str) -> Result<T, String> {
        self.require(name)?
            .parse::<T>()
            .map_err(|_| format!("bad value for --{name}"))
    }
}

#[derive(Serialize)]
struct SidecarManifest {
    subcommand: String,
    tool_version: String,
    flags: Vec<(String, String)>,
    input_digests: Vec<(String, String)>,
}

fn write_sidecar(
    out: &Path,
    subcommand: &str,
    flags: &Flags,
    inputs: &[&Path],
) -> crate::error::Result<()> {
    let mut digests = Vec::new();
    for path in inputs {
        let bytes = std::fs::read(path).map_err(|e| Error::io(*path, e))?;
        digests.push((
            path.display().to_string(),
            format!("fnv1a64:{:016x}", fnv1a64(&bytes)),
        ));
    }
    let manifest = SidecarManifest {
        subcommand: subcommand.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        flags: flags.pairs.clone(),
        input_digests: digests,
    };
    let path = PathBuf::from(format!("{}.manifest.json", out.display()));
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::Parse(format!("manifest serialization failed: {e}")))?,
    )
    .map_err(|e| Error::io(&path, e))
}

const MATRIX_GEN_HELP: &str = "\
poolscreen matrix gen --n N --m M --r R --c C --seed S --out FILE

Constructs an M x N balanced binary pooling matrix with R ones per row and
C ones per column (N*C = M*R required), pairwise row/column dot products at
most 1, deterministically for the given seed.
";

const MATRIX_CHECK_HELP: &str = "\
poolscreen matrix check --in FILE [--disjunct D] [--rip1 K]
    [--disjunct-budget B] [--rip1-budget B]

Verifies the balance invariants and prints a certificate as JSON:
disjunctness order (exhaustively checked up to D when given, analytic c-1
floor otherwise), mutual coherence, the RIP-1 expansion certificate at
sparsity K, and the cardinality-bound consistency flag. Exit 2 when the
matrix fails verification or a requested property does not hold.
";

pub fn cmd_matrix(args: &[String]) -> i32 {
    let Some(sub) = args.first() else {
        return usage("matrix needs a subcommand: gen or check");
    };
    match sub.as_str() {
        "gen" => {
            let flags = match Flags::parse(&args[1..], &["n", "m", "r", "c", "seed", "out"]) {
                Ok(Some(f)) => f,
                Ok(None) => {
                    print!("{MATRIX_GEN_HELP}");
                    return EXIT_OK;
                }
                Err(msg) => return usage(&msg),
            };
            let parsed = (|| -> Result<(usize, usize, usize, usize, u64, PathBuf), String> {
                Ok((
                    flags.require_num("n")?,
                    flags.require_num("m")?,
                    flags.require_num("r")?,
                    flags.require_num("c")?,
                    flags.parse_num::<u64>("seed")?.unwrap_or(0),
                    PathBuf::from(flags.require("out")?),
                ))
            })();
            let (n, m, r, c, seed, out) = match parsed {
                Ok(v) => v,
                Err(msg) => return usage(&msg),
            };
            match PoolingMatrix::construct_balanced(n, m, r, c, seed)
                .and_then(|matrix| matrix.save(&out))
                .and_then(|()| write_sidecar(&out, "matrix gen", &flags, &[]))
            {
                Ok(()) => {
                    println!("wrote {}", out.display());
                    EXIT_OK
                }
                Err(e) => runtime(&e),
            }
        }
        "check" => {
            let flags = match Flags::parse(
                &args[1..],
                &["in", "disjunct", "rip1", "disjunct-budget", "rip1-budget"],
            ) {
                Ok(Some(f)) => f,
                Ok(None) => {
                    print!("{MATRIX_CHECK_HELP}");
                    return EXIT_OK;
                }
                Err(msg) => return usage(&msg),
            };
            let input = match flags.require("in") {
                Ok(p) => PathBuf::from(p),
                Err(msg) => return usage(&msg),
            };
            let mut opts = CertifyOptions::default();
            match (|| -> Result<(), String> {
                opts.disjunct = flags.parse_num("disjunct")?;
                opts.rip1_k = flags.parse_num("rip1")?;
                if let Some(b) = flags.parse_num("disjunct-budget")? {
                    opts.disjunct_budget = b;
                }
                if let Some(b) = flags.parse_num("rip1-budget")? {
                    opts.rip1_budget = b;
                }
                Ok(())
            })() {
                Ok(()) => {}
                Err(msg) => return usage(&msg),
            }
            let matrix = match PoolingMatrix::load(&input) {
                Ok(m) => m,
                Err(e) => return runtime(&e),
            };
            let certificate = match matrix.certify(&opts) {
                Ok(c) => c,
                Err(e) => return runtime(&e),
            };
            println!(
                "{}",
                serde_json::to_string_pretty(&certificate).expect("certificate serializes")
            );
            if certificate.passed(opts.disjunct) {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            }
        }
        other => usage(&format!("unknown matrix subcommand {other:?}")),
    }
}

const DECODE_HELP: &str = "\
poolscreen decode --matrix FILE (--counts FILE | --outcomes FILE)
    --decoder comp|ncomp|mip|classo --out FILE
    [--t T] [--lambda L] [--tau TAU] [--max-nodes N]

Decodes one chunk. --counts holds whitespace-separated pool counts;
--outcomes holds binary pool results (any nonzero count reads as positive).
Binary decoders (comp, ncomp) binarize counts when given --counts;
quantitative decoders (mip, classo) require --counts. The verdict is written
as a single 0/1 line. Exit 3 when the branch-and-bound node budget runs out
before optimality.
";

pub fn cmd_decode(args: &[String]) -> i32 {
    let flags = match Flags::parse(
        args,
        &[
            "matrix",
            "counts",
            "outcomes",
            "decoder",
            "out",
            "t",
            "lambda",
            "tau",
            "max-nodes",
        ],
    ) {
        Ok(Some(f)) => f,
        Ok(None) => {
            print!("{DECODE_HELP}");
            return EXIT_OK;
        }
        Err(msg) => return usage(&msg),
    };
    let parsed = (|| -> Result<(PathBuf, PathBuf, String, PathBuf), String> {
        let matrix = PathBuf::from(flags.require("matrix")?);
        let counts = match (flags.get("counts"), flags.get("outcomes")) {
            (Some(c), None) => PathBuf::from(c),
            (None, Some(o)) => PathBuf::from(o),
            (Some(_), Some(_)) => return Err("give either --counts or --outcomes, not both".into()),
            (None, None) => return Err("missing --counts or --outcomes".into()),
        };
        let decoder = flags.require("decoder")?.to_string();
        let out = PathBuf::from(flags.require("out")?);
        Ok((matrix, counts, decoder, out))
    })();
    let (matrix_path, counts_path, decoder, out) = match parsed {
        Ok(v) => v,
        Err(msg) => return usage(&msg),
    };
    let mut cfg = DecoderConfig::default();
    match (|| -> Result<usize, String> {
        if let Some(l) = flags.parse_num("lambda")? {
            cfg.lambda = l;
        }
        if let Some(t) = flags.parse_num("tau")? {
            cfg.tau = t;
        }
        if let Some(n) = flags.parse_num("max-nodes")? {
            cfg.max_nodes = n;
        }
        Ok(flags.parse_num("t")?.unwrap_or(2))
    })() {
        Ok(t) => {
            let outcome_is_binary = flags.get("outcomes").is_some();
            match decode_inner(
                &matrix_path,
                &counts_path,
                &decoder,
                t,
                &cfg,
                outcome_is_binary,
                &out,
            )
            .and_then(|()| write_sidecar(&out, "decode", &flags, &[&matrix_path, &counts_path]))
            {
                Ok(()) => EXIT_OK,
                Err(e) => runtime(&e),
            }
        }
        Err(msg) => usage(&msg),
    }
}

fn decode_inner(
    matrix_path: &Path,
    counts_path: &Path,
    decoder: &str,
    ncomp_t: usize,
    cfg: &DecoderConfig,
    binary_input: bool,
    out: &Path,
) -> crate::error::Result<()> {
    let matrix = PoolingMatrix::load(matrix_path)?;
    let text = std::fs::read_to_string(counts_path).map_err(|e| Error::io(counts_path, e))?;
    let counts = CountVector::from_line(&text)?;
    let verdicts = match decoder {
        "comp" => comp_decode(&matrix, &counts.binarize())?,
        "ncomp" => ncomp_decode(&matrix, &counts.binarize(), ncomp_t)?,
        "mip" => {
            if binary_input {
                return Err(Error::InvalidConfig(
                    "mip decodes quantitative counts; give --counts".into(),
                ));
            }
            let sol = mip_decode(&matrix, &counts, cfg)?;
            if !sol.optimal {
                return Err(Error::BudgetExceeded {
                    budget: cfg.max_nodes,
                    needed: sol.nodes,
                });
            }
            sol.verdicts
        }
        "classo" => {
            if binary_input {
                return Err(Error::InvalidConfig(
                    "classo decodes quantitative counts; give --counts".into(),
                ));
            }
            classo_decode(&matrix, &counts, cfg)?.verdicts
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown decoder {other:?} (expected comp, ncomp, mip, or classo)"
            )))
        }
    };
    std::fs::write(out, format!("{}\n", verdicts.to_line())).map_err(|e| Error::io(out, e))?;
    println!("wrote {}", out.display());
    Ok(())
}

const EXPERIMENT_HELP: &str = "\
poolscreen experiment --config FILE --out DIR [--mode classification|outlier]

Runs the sweep described by the JSON config (prevalences x repeats x methods)
and writes results.csv plus manifest.json into DIR. In outlier mode, pool
counts come from anomaly scores of synthetic pool features instead of the
counting oracle. Output is byte-identical across reruns of the same config
and master seed.
";

pub fn cmd_experiment(args: &[String]) -> i32 {
    let flags = match Flags::parse(args, &["config", "out", "mode"]) {
        Ok(Some(f)) => f,
        Ok(None) => {
            print!("{EXPERIMENT_HELP}");
            return EXIT_OK;
        }
        Err(msg) => return usage(&msg),
    };
    let (config_path, out_dir) = match (flags.require("config"), flags.require("out")) {
        (Ok(c), Ok(o)) => (PathBuf::from(c), PathBuf::from(o)),
        (Err(msg), _) | (_, Err(msg)) => return usage(&msg),
    };
    let mode = match flags.get("mode").unwrap_or("classification") {
        "classification" => Mode::Classification,
        "outlier" => Mode::Outlier,
        other => return usage(&format!("bad --mode {other:?}")),
    };
    let cfg = match ExperimentConfig::load(&config_path) {
        Ok(c) => c,
        Err(e) => return runtime(&e),
    };
    match sweep_and_emit(&cfg, mode, &out_dir) {
        Ok((csv, manifest)) => {
            println!("wrote {}", csv.display());
            println!("wrote {}", manifest.display());
            EXIT_OK
        }
        Err(e) => runtime(&e),
    }
}
