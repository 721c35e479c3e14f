//! Property tests for the decoder and oracle invariants.

use proptest::prelude::*;

use poolscreen::decode::{
    classo_decode, comp_decode, dorfman_decode, mip_decode, ncomp_decode, DecoderConfig,
};
use poolscreen::matrix::PoolingMatrix;
use poolscreen::oracle::{exact_counts, noisy_counts, ConfusionModel, LabelVector};

/// Feasible small balanced shapes (n, m, r, c).
const SHAPES: [(usize, usize, usize, usize); 4] =
    [(12, 8, 3, 2), (16, 8, 4, 2), (20, 15, 4, 3), (18, 12, 3, 2)];

fn matrix_strategy() -> impl Strategy<Value = PoolingMatrix> {
    (0usize..SHAPES.len(), 0u64..50).prop_map(|(shape, seed)| {
        let (n, m, r, c) = SHAPES[shape];
        PoolingMatrix::construct_balanced(n, m, r, c, seed).expect("feasible shape")
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// With pool outcomes that have no false negatives (every pool holding a
    /// defective reads positive), COMP never misses a defective.
    #[test]
    fn comp_has_no_false_negatives_without_false_negative_pools(
        matrix in matrix_strategy(),
        seed in 0u64..1000,
        extra_positives in proptest::collection::vec(any::<bool>(), 20),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let bits: Vec<u8> = (0..matrix.n()).map(|_| u8::from(rng.gen_bool(0.2))).collect();
        let truth = LabelVector::from_bits(bits).unwrap();
        // Start from exact outcomes and add arbitrary false positives.
        let mut outcomes = exact_counts(&matrix, &truth).unwrap().binarize();
        for (q, flip) in extra_positives.iter().enumerate() {
            if *flip && q < outcomes.len() {
                outcomes[q] = 1;
            }
        }
        let verdicts = comp_decode(&matrix, &outcomes).unwrap();
        for i in truth.support() {
            prop_assert_eq!(verdicts.get(i), 1);
        }
    }

    /// Identity confusion model reproduces the exact counts for any labels.
    #[test]
    fn identity_confusion_is_noiseless(
        matrix in matrix_strategy(),
        seed in 0u64..1000,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let bits: Vec<u8> = (0..matrix.n()).map(|_| u8::from(rng.gen_bool(0.3))).collect();
        let truth = LabelVector::from_bits(bits).unwrap();
        let cm = ConfusionModel::identity(matrix.r(), seed);
        prop_assert_eq!(
            noisy_counts(&matrix, &truth, &cm).unwrap(),
            exact_counts(&matrix, &truth).unwrap()
        );
    }

    /// Dorfman with perfect oracles recovers every population exactly, and
    /// its test count respects round-1 + retested-items accounting.
    #[test]
    fn dorfman_with_perfect_oracles_is_exact(
        n in 1usize..200,
        g in 1usize..20,
        seed in 0u64..1000,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let bits: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.1))).collect();
        let truth = LabelVector::from_bits(bits).unwrap();
        let t = truth.clone();
        let plan = dorfman_decode(
            n,
            g,
            |group| group.iter().any(|&i| t.get(i) == 1),
            |i| t.get(i) == 1,
        );
        prop_assert_eq!(&plan.verdicts, &truth);
        prop_assert_eq!(plan.round1_tests, n.div_ceil(g));
        prop_assert!(plan.tests_used() <= n + n.div_ceil(g));
    }

    /// Flipping any pool outcome from negative to positive never demotes an
    /// NCOMP verdict from positive to negative.
    #[test]
    fn ncomp_is_monotone_in_positive_pools(
        matrix in matrix_strategy(),
        outcome_bits in proptest::collection::vec(any::<bool>(), 15),
        flip in 0usize..15,
        t in 0usize..2,
    ) {
        let m = matrix.m();
        let mut outcomes: Vec<u8> = (0..m)
            .map(|q| u8::from(*outcome_bits.get(q).unwrap_or(&false)))
            .collect();
        let before = ncomp_decode(&matrix, &outcomes, t).unwrap();
        outcomes[flip % m] = 1;
        let after = ncomp_decode(&matrix, &outcomes, t).unwrap();
        for i in 0..matrix.n() {
            prop_assert!(after.get(i) >= before.get(i));
        }
    }

    /// Pool counts are additive over disjoint supports.
    #[test]
    fn exact_counts_additive_on_disjoint_supports(
        matrix in matrix_strategy(),
        split in proptest::collection::vec(0u8..3, 20),
    ) {
        let n = matrix.n();
        let mut a = LabelVector::zeros(n);
        let mut b = LabelVector::zeros(n);
        let mut union = LabelVector::zeros(n);
        for i in 0..n {
            match split.get(i % split.len()).copied().unwrap_or(0) {
                1 if i % 2 == 0 => { a.set(i, 1); union.set(i, 1); }
                2 if i % 2 == 1 => { b.set(i, 1); union.set(i, 1); }
                _ => {}
            }
        }
        let ya = exact_counts(&matrix, &a).unwrap();
        let yb = exact_counts(&matrix, &b).unwrap();
        let yu = exact_counts(&matrix, &union).unwrap();
        for q in 0..matrix.m() {
            prop_assert_eq!(yu.get(q), ya.get(q) + yb.get(q));
        }
    }

    /// The relaxed CLasso objective never exceeds the binary optimum's
    /// objective (the box contains every binary vector).
    #[test]
    fn classo_relaxation_lower_bounds_the_mip_objective(
        matrix in matrix_strategy(),
        seed in 0u64..200,
        lambda_idx in 0usize..4,
    ) {
        use rand::{Rng, SeedableRng};
        let lambda = [0.0, 0.01, 0.1, 0.5][lambda_idx];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let counts: Vec<u32> = (0..matrix.m()).map(|_| rng.gen_range(0..=matrix.r() as u32)).collect();
        let y = poolscreen::oracle::CountVector::new(counts);
        let cfg = DecoderConfig { lambda, max_nodes: 200_000, ..DecoderConfig::default() };
        let mip = mip_decode(&matrix, &y, &cfg).unwrap();
        prop_assert!(mip.optimal);
        let classo = classo_decode(&matrix, &y, &cfg).unwrap();
        prop_assert!(classo.objective <= mip.objective + 1e-7);
    }

    /// Every constructed matrix satisfies the balance invariants, and
    /// serialization is the identity on it.
    #[test]
    fn constructed_matrices_verify_and_round_trip(matrix in matrix_strategy()) {
        prop_assert!(matrix.verify_balanced());
        prop_assert!(matrix.mutual_coherence() <= 1);
        let restored = PoolingMatrix::from_text(&matrix.to_text()).unwrap();
        prop_assert_eq!(restored, matrix);
    }
}
