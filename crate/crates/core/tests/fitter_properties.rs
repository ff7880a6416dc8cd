use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sg2::circuit::{BeamsplitterParams, CircuitModel};
use sg2::estimator::{extract_sg2, Estimate, PlateauModel, ZetaFit};
use sg2::fitter::{fit, predict_matrix, Bunching, CorrelationMatrix};
use sg2::fock::zeta;

fn reference_bunching() -> Bunching {
    Bunching {
        zeta0: 1.34,
        zeta_delay: zeta(4, 1.34, 3.64),
    }
}

fn unbalanced() -> CircuitModel {
    let bs = |r: f64| BeamsplitterParams::new(r.sqrt(), (1.0 - r).sqrt()).unwrap();
    CircuitModel::new(bs(0.42), bs(0.6), bs(0.47), 4).unwrap()
}

fn exact(values: [f64; 6]) -> CorrelationMatrix {
    CorrelationMatrix {
        values,
        sigmas: values.map(|v| 0.01 + 0.05 * v),
    }
}

#[test]
fn ideal_source_limits() {
    let c = CircuitModel::balanced(4);
    let perfect = predict_matrix(0.0, 1.0, &c, Bunching::NONE).unwrap();
    let distinguishable = predict_matrix(0.0, 0.0, &c, Bunching::NONE).unwrap();
    for p in 0..2 {
        assert!((perfect[p] - 1.0).abs() < 1e-12);
        assert!((distinguishable[p] - 0.5).abs() < 1e-12);
    }
    for p in 2..6 {
        assert!(perfect[p].abs() < 1e-12);
        assert!((distinguishable[p] - 0.5).abs() < 1e-12);
    }
}

#[test]
fn reference_source_zero_lag_values() {
    // auto = zeta0 g / 2 + zeta(4) (1 + C) / 2, cross with 1 - C.
    let m = predict_matrix(0.05, 0.61, &CircuitModel::balanced(4), reference_bunching()).unwrap();
    assert!((m[0] - 0.930).abs() < 5e-4, "auto {}", m[0]);
    assert!((m[2] - 0.251).abs() < 5e-4, "cross {}", m[2]);
}

#[test]
fn prediction_inverts_through_two_value_extraction() {
    let b = reference_bunching();
    let zf = ZetaFit {
        zeta0: Estimate::new(b.zeta0, 0.01),
        tau1: Estimate::new(3.64, 0.1),
        covariance: [[1e-4, 0.0], [0.0, 1e-2]],
        chi2: 0.0,
        dof: 10,
        tau1_identified: true,
        model: PlateauModel::Interferometer { delay: 4 },
    };
    for &(g, c) in &[(0.05, 0.61), (0.3, 0.2), (0.0, 1.0), (0.9, 0.05)] {
        let m = predict_matrix(g, c, &CircuitModel::balanced(4), b).unwrap();
        let ex = extract_sg2(Estimate::new(m[0], 0.01), Estimate::new(m[2], 0.01), &zf, 4);
        assert!((ex.g2_hbt0.value - g).abs() < 1e-10, "g {g}: {}", ex.g2_hbt0.value);
        assert!((ex.coherence.value - c).abs() < 1e-10, "C {c}: {}", ex.coherence.value);
    }
}

#[test]
fn noiseless_fit_inverts_prediction() {
    for circuit in [CircuitModel::balanced(4), unbalanced()] {
        let m = exact(predict_matrix(0.3, 0.7, &circuit, reference_bunching()).unwrap());
        let f = fit(&m, &circuit, reference_bunching()).unwrap();
        assert!((f.g2_hbt0.value - 0.3).abs() < 1e-4);
        assert!((f.coherence.value - 0.7).abs() < 1e-4);
    }
}

#[test]
fn sigma_scaling_leaves_estimates_unchanged() {
    let circuit = unbalanced();
    let mut m = exact(predict_matrix(0.2, 0.55, &circuit, Bunching::NONE).unwrap());
    m.values[0] += 0.02;
    m.values[3] -= 0.015;
    let base = fit(&m, &circuit, Bunching::NONE).unwrap();
    let mut scaled = m;
    scaled.sigmas = m.sigmas.map(|s| 3.0 * s);
    let f = fit(&scaled, &circuit, Bunching::NONE).unwrap();
    assert!((f.g2_hbt0.value - base.g2_hbt0.value).abs() < 1e-7);
    assert!((f.coherence.value - base.coherence.value).abs() < 1e-7);
    assert!((f.chi2 * 9.0 - base.chi2).abs() < 1e-6 * (1.0 + base.chi2));
    assert!((f.g2_hbt0.sigma / base.g2_hbt0.sigma - 3.0).abs() < 1e-9);
}

#[test]
fn detector_relabeling_is_a_symmetry_of_the_balanced_circuit() {
    // Swapping A with B maps pairs (AB, CD, AC, AD, BC, BD) onto
    // (AB, CD, BC, BD, AC, AD); swapping C with D maps them onto
    // (AB, CD, AD, AC, BD, BC).
    let circuit = CircuitModel::balanced(4);
    let mut m = exact(predict_matrix(0.15, 0.5, &circuit, reference_bunching()).unwrap());
    m.values = [0.71, 0.69, 0.33, 0.30, 0.36, 0.31];
    let base = fit(&m, &circuit, reference_bunching()).unwrap();
    for perm in [[0, 1, 4, 5, 2, 3], [0, 1, 3, 2, 5, 4]] {
        let relabeled = CorrelationMatrix {
            values: perm.map(|p| m.values[p]),
            sigmas: perm.map(|p| m.sigmas[p]),
        };
        let f = fit(&relabeled, &circuit, reference_bunching()).unwrap();
        assert!((f.g2_hbt0.value - base.g2_hbt0.value).abs() < 1e-7);
        assert!((f.coherence.value - base.coherence.value).abs() < 1e-7);
        assert!((f.chi2 - base.chi2).abs() < 1e-7);
    }
}

#[test]
fn chi2_per_dof_is_near_one_under_gaussian_noise() {
    let circuit = unbalanced();
    let truth = predict_matrix(0.3, 0.6, &circuit, Bunching::NONE).unwrap();
    let sigmas = truth.map(|v| 0.05 * v);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let repeats = 100;
    let mut total = 0.0;
    for _ in 0..repeats {
        let values: [f64; 6] = std::array::from_fn(|p| {
            let z: f64 = StandardNormal.sample(&mut rng);
            truth[p] + sigmas[p] * z
        });
        let f = fit(&CorrelationMatrix { values, sigmas }, &circuit, Bunching::NONE).unwrap();
        assert!(!f.at_boundary);
        total += f.chi2 / f.dof as f64;
    }
    let mean = total / repeats as f64;
    assert!((0.8..=1.2).contains(&mean), "mean chi2/dof {mean}");
}

#[test]
fn unusable_sigma_is_rejected() {
    let circuit = CircuitModel::balanced(4);
    let mut m = exact(predict_matrix(0.1, 0.5, &circuit, Bunching::NONE).unwrap());
    m.sigmas[4] = 0.0;
    assert!(matches!(fit(&m, &circuit, Bunching::NONE), Err(sg2::Error::Invalid(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn interior_truth_is_recovered(g in 0.02f64..1.9, c in 0.02f64..0.98) {
        let circuit = unbalanced();
        let m = exact(predict_matrix(g, c, &circuit, reference_bunching()).unwrap());
        let f = fit(&m, &circuit, reference_bunching()).unwrap();
        prop_assert!((f.g2_hbt0.value - g).abs() < 1e-4);
        prop_assert!((f.coherence.value - c).abs() < 1e-4);
    }

    #[test]
    fn predictions_are_affine_in_g_and_c(g in 0.0f64..2.0, c in 0.0f64..1.0) {
        let circuit = unbalanced();
        let b = reference_bunching();
        let at = |g: f64, c: f64| predict_matrix(g, c, &circuit, b).unwrap();
        let (p, p0, pg, pc) = (at(g, c), at(0.0, 0.0), at(1.0, 0.0), at(0.0, 1.0));
        for k in 0..6 {
            let lin = p0[k] + g * (pg[k] - p0[k]) + c * (pc[k] - p0[k]);
            prop_assert!((p[k] - lin).abs() < 1e-12);
        }
    }
}
