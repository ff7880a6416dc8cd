//! Photon-number distribution from measured rates.

use serde::Serialize;

use crate::circuit::{CircuitModel, InternalState, LONG_ARM, SHORT_ARM};
use crate::error::{invalid, Error, Result};
use crate::fock::FockDistribution;
use crate::simulate::Mode;

/// Measured quantities feeding the reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FockInputs {
    /// Total detected single-photon rate.
    pub singles_rate_hz: f64,
    pub pulse_rate_hz: f64,
    /// Overall per-photon detection efficiency.
    pub efficiency: f64,
    pub g2_hbt0: f64,
    /// Pulses with three or more detectors firing.
    pub triples: u64,
    /// Pulses observed.
    pub n_trials: u64,
    /// Probability that a three-photon pulse registers as a triple.
    pub three_fold_efficiency: f64,
    /// One minus the confidence level of the `p3` bound.
    pub alpha: f64,
}

/// `p1 = rate / (pulse_rate * eta)` and `p2 = g2 p1^2 / 2`.
///
/// With no triples observed, `p3` is the one-sided upper bound
/// `ln(1 / alpha) / (n_trials * eps3)`; otherwise it is the point estimate
/// `triples / (n_trials * eps3)`.
pub fn reconstruct_fock(inputs: &FockInputs) -> Result<FockDistribution> {
    let FockInputs {
        singles_rate_hz,
        pulse_rate_hz,
        efficiency,
        g2_hbt0,
        triples,
        n_trials,
        three_fold_efficiency,
        alpha,
    } = *inputs;
    if !(pulse_rate_hz > 0.0 && efficiency > 0.0 && efficiency <= 1.0) {
        return Err(invalid("pulse rate and efficiency must be positive"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("confidence parameter alpha = {alpha} outside (0, 1)")));
    }
    if !(singles_rate_hz >= 0.0) || !(g2_hbt0 >= 0.0) {
        return Err(invalid("rate and g2 must be non-negative"));
    }
    let p1 = singles_rate_hz / (pulse_rate_hz * efficiency);
    let p2 = g2_hbt0 * p1 * p1 / 2.0;
    let denom = n_trials as f64 * three_fold_efficiency;
    if !(denom > 0.0) {
        return Err(invalid("three-fold detection efficiency and trial count must be positive"));
    }
    let (p3, bound) = if triples == 0 {
        ((1.0 / alpha).ln() / denom, true)
    } else {
        (triples as f64 / denom, false)
    };
    let p0 = 1.0 - p1 - p2 - if bound { 0.0 } else { p3 };
    if p0 < 0.0 {
        return Err(Error::Numerical(format!(
            "reconstructed p1 + p2 + p3 = {} exceeds one",
            1.0 - p0
        )));
    }
    if bound {
        FockDistribution::with_upper_bound(vec![p0, p1, p2, p3])
    } else {
        FockDistribution::new(vec![p0, p1, p2, p3])
    }
}

/// Probability that a three-photon pulse produces three distinct detector
/// clicks in one time slot.
///
/// All three photons must survive (`eta^3`). Through the interferometer they
/// must also take the same arm (probability 1/4, split evenly between the
/// arms); with the interferometer bypassed they all enter the short arm.
pub fn three_fold_efficiency(circuit: &CircuitModel, mode: Mode, efficiency: f64) -> Result<f64> {
    let photons = |arm: usize| -> Vec<(usize, InternalState)> {
        (0..3).map(|_| (arm, InternalState::pure(0))).collect()
    };
    let routing = if mode.uses_interferometer() {
        0.125 * circuit.three_fold_probability(&photons(LONG_ARM))?
            + 0.125 * circuit.three_fold_probability(&photons(SHORT_ARM))?
    } else {
        circuit.three_fold_probability(&photons(SHORT_ARM))?
    };
    Ok(efficiency.powi(3) * routing)
}
