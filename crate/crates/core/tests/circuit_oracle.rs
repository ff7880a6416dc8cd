mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sg2::circuit::{pattern_probability, permanent, BeamsplitterParams, CircuitModel, InternalState, N_MODES};
use sg2::fock::OccupationPattern;

use common::{brute_force_pattern_probability, permanent_by_permutations, random_unitary};

fn random_inputs<R: Rng>(n: usize, modes: usize, rng: &mut R, kind: usize) -> Vec<(usize, InternalState)> {
    (0..n)
        .map(|j| {
            let mode = rng.random_range(0..modes);
            let state = match kind {
                0 => InternalState::pure(0),
                1 => InternalState::pure(j as u64),
                _ => InternalState::new(
                    j as u64,
                    rng.random_range(0.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(0.0..std::f64::consts::PI),
                ),
            };
            (mode, state)
        })
        .collect()
}

#[test]
fn pattern_probabilities_match_amplitude_expansion() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let u = random_unitary(N_MODES, &mut rng);
        for n in 1..=3 {
            for kind in 0..3 {
                let inputs = random_inputs(n, N_MODES, &mut rng, kind);
                let mut sum = 0.0;
                for pattern in OccupationPattern::enumerate(N_MODES, n) {
                    let fast = pattern_probability(&u, &inputs, &pattern).unwrap();
                    let slow = brute_force_pattern_probability(&u, &inputs, &pattern);
                    worst = worst.max((fast - slow).abs());
                    sum += fast;
                }
                assert!((sum - 1.0).abs() < 1e-10, "probabilities sum to {sum}");
            }
        }
    }
    assert!(worst < 1e-10, "largest deviation {worst:e}");
}

#[test]
fn permanent_matches_permutation_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for n in 0..=6 {
        for _ in 0..10 {
            let a: Vec<Vec<Complex64>> = (0..n)
                .map(|_| {
                    (0..n)
                        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                        .collect()
                })
                .collect();
            let ryser = permanent(&a).unwrap();
            let oracle = permanent_by_permutations(&a);
            assert!((ryser - oracle).norm() < 1e-12 * (1.0 + oracle.norm()), "n={n}: {ryser} vs {oracle}");
        }
    }
}

#[test]
fn integer_permanents_are_exact() {
    // perm of the all-ones n x n matrix is n!.
    for n in 1..=6usize {
        let a = vec![vec![Complex64::new(1.0, 0.0); n]; n];
        let f: usize = (1..=n).product();
        assert_eq!(permanent(&a).unwrap(), Complex64::new(f as f64, 0.0));
    }
}

#[test]
fn non_square_permanent_is_a_dimension_error() {
    let a = vec![vec![Complex64::new(1.0, 0.0); 3]; 2];
    assert!(matches!(permanent(&a), Err(sg2::Error::Dimension(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn circuit_unitary_is_unitary(r2 in 0.0f64..=1.0, r3 in 0.0f64..=1.0, r4 in 0.0f64..=1.0) {
        let bs = |r: f64| BeamsplitterParams::new(r, (1.0 - r * r).max(0.0).sqrt()).unwrap();
        let c = CircuitModel::new(bs(r2), bs(r3), bs(r4), 4).unwrap();
        prop_assert!(c.unitary().unitarity_error() < 1e-12);
    }

    #[test]
    fn two_photon_probabilities_sum_to_one(seed in any::<u64>(), overlap in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_unitary(N_MODES, &mut rng);
        let inputs = [
            (1, InternalState::new(0, overlap, 0.0, 0.0)),
            (2, InternalState::new(1, overlap, 0.0, 0.0)),
        ];
        let total: f64 = OccupationPattern::enumerate(N_MODES, 2)
            .iter()
            .map(|p| pattern_probability(&u, &inputs, p).unwrap())
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }
}
