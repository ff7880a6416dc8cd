use sg2::efficiency::{method_variances, replicate, variance_ratio_c, EfficiencySettings, Method};

// Per-trial variances (variance times pulse budget) should not depend on
// the budget once counts are large: the raw variance falls as 1/n.
#[test]
fn per_trial_variance_is_independent_of_pulse_budget() {
    let base = EfficiencySettings {
        // A brighter source keeps the smaller budget in the many-count regime.
        p1: 0.1,
        replications: 1500,
        include_hwp: false,
        bootstrap_resamples: 10,
        seed: 31,
        ..EfficiencySettings::default()
    };
    let at = |n: u64| {
        let s = EfficiencySettings { n_pulses: n, ..base.clone() };
        let reps = replicate(0.3, 0.6, &s).unwrap();
        (
            method_variances(&reps, Method::Sg2, n),
            method_variances(&reps, Method::SantoriTwoStep, n),
        )
    };
    let (sg2_small, two_step_small) = at(10_000);
    let (sg2_large, two_step_large) = at(100_000);
    let pairs = [
        ("sg2 g2", sg2_small.g2, sg2_large.g2),
        ("sg2 C", sg2_small.coherence, sg2_large.coherence),
        ("two-step g2", two_step_small.g2, two_step_large.g2),
        ("two-step C", two_step_small.coherence, two_step_large.coherence),
    ];
    for (name, small, large) in pairs {
        let ratio = small.unwrap() / large.unwrap();
        assert!((ratio - 1.0).abs() < 0.15, "{name}: per-trial variance ratio {ratio:.3}");
    }
}

#[test]
fn analytic_ratio_limits() {
    assert!((variance_ratio_c(0.0, 1.0) - 1.0).abs() < 1e-15);
    assert!((variance_ratio_c(1.0, 0.0) - 2.0).abs() < 1e-15);
    assert!((variance_ratio_c(0.06, 0.60) - 1.277).abs() < 0.005);
    // The ratio never drops below one on the physical square.
    for i in 0..=20 {
        for k in 0..=20 {
            assert!(variance_ratio_c(i as f64 / 20.0, k as f64 / 20.0) >= 1.0);
        }
    }
}
