//! Randomized invariants on the model layer and the low-level kernels.

use proptest::prelude::*;

use dcbp::linalg::{matexp_reference, partial_fraction_residual};
use dcbp::model::OffspringLaw;
use dcbp::simulator::replication_seed;
use nalgebra::DMatrix;

proptest! {
    /// The two-atom construction reproduces the requested means exactly and
    /// yields a proper distribution (PGF at the all-ones point is 1).
    #[test]
    fn from_means_round_trips(means in proptest::collection::vec(0.0f64..5.0, 1..5)) {
        let law = OffspringLaw::from_means(&means).unwrap();
        let got = law.means();
        for (a, b) in means.iter().zip(&got) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let ones = vec![1.0; means.len()];
        prop_assert!((law.pgf(&ones).unwrap() - 1.0).abs() < 1e-12);
    }

    /// PGFs are monotone in each coordinate on [0, 1]^d.
    #[test]
    fn pgf_is_monotone(
        means in proptest::collection::vec(0.0f64..3.0, 1..4),
        s in 0.0f64..1.0,
        bump in 0.0f64..0.5,
    ) {
        let law = OffspringLaw::from_means(&means).unwrap();
        let lo = vec![s; means.len()];
        let hi = vec![(s + bump).min(1.0); means.len()];
        prop_assert!(law.pgf(&lo).unwrap() <= law.pgf(&hi).unwrap() + 1e-15);
    }

    /// Semigroup property of the reference exponential on random 3x3 inputs.
    #[test]
    fn reference_exponential_semigroup(entries in proptest::collection::vec(-1.0f64..1.0, 9)) {
        let a = DMatrix::from_row_slice(3, 3, &entries);
        let two = matexp_reference(&a, 2.0);
        let one = matexp_reference(&a, 1.0);
        let err = (&two - &one * &one).iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        prop_assert!(err < 1e-9, "semigroup error {err:e}");
    }

    /// The exponential divided-difference identity holds on random
    /// well-separated exponent sets.
    #[test]
    fn partial_fraction_holds_for_separated_sets(
        start in -2.0f64..2.0,
        gaps in proptest::collection::vec(0.1f64..1.0, 1..6),
    ) {
        let mut alphas = vec![start];
        for g in gaps {
            alphas.push(alphas.last().unwrap() + g);
        }
        prop_assert!(partial_fraction_residual(&alphas).unwrap() < 1e-8);
    }

    /// Replication streams never collide for nearby indices under one seed.
    #[test]
    fn replication_seeds_are_distinct(seed in any::<u64>(), rep in 0u64..10_000) {
        prop_assert_ne!(replication_seed(seed, rep), replication_seed(seed, rep + 1));
        prop_assert_ne!(replication_seed(seed, rep), replication_seed(seed.wrapping_add(1), rep));
    }
}
