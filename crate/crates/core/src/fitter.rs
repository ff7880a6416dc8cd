//! Joint fit of `g2_hbt(0)` and `C` to all six zero-lag detector-pair
//! correlations, valid for arbitrary beamsplitter ratios.
//!
//! At leading order two photons share a time slot either because one pulse
//! emitted a pair that took a single arm, or because photons from pulses
//! `d` apart took the long and the short arm. For detector pair `(l, m)`:
//!
//! ```text
//! g_lm = [ (g zeta0 / 8) * 2 (|U_lL|^2 |U_mL|^2 + |U_lS|^2 |U_mS|^2)
//!        + (zeta(d) / 4) * P_LS(l, m; C) ] / (q_l q_m)
//! q_l  = (|U_lL|^2 + |U_lS|^2) / 2
//! ```
//!
//! where `P_LS` is the probability that one long-arm and one short-arm
//! photon with overlap `C` end on detectors `l` and `m`. The prediction is
//! affine in `(g, C)`.

use serde::Serialize;

use crate::circuit::{CircuitModel, InternalState, LONG_ARM, N_MODES, SHORT_ARM};
use crate::error::{invalid, Result};
use crate::estimator::{CorrelationSet, Estimate, PAIRS};
use crate::fock::OccupationPattern;
use crate::optimize::{invert_2x2, nelder_mead, NelderMeadOptions};

pub const G2_RANGE: (f64, f64) = (0.0, 2.0);
pub const C_RANGE: (f64, f64) = (0.0, 1.0);

/// Zero-lag correlations of the six detector pairs, in [`PAIRS`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub values: [f64; 6],
    pub sigmas: [f64; 6],
}

impl CorrelationMatrix {
    pub fn from_correlations(set: &CorrelationSet) -> Self {
        let mut values = [0.0; 6];
        let mut sigmas = [0.0; 6];
        for p in 0..6 {
            let e = set.g2(p, 0);
            values[p] = e.value;
            sigmas[p] = e.sigma;
        }
        CorrelationMatrix { values, sigmas }
    }
}

/// Bunching factors entering the prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bunching {
    pub zeta0: f64,
    pub zeta_delay: f64,
}

impl Bunching {
    pub const NONE: Bunching = Bunching {
        zeta0: 1.0,
        zeta_delay: 1.0,
    };
}

/// `pred = offset + g * slope_g + C * slope_c` for each pair.
#[derive(Debug, Clone, Copy)]
struct AffineModel {
    offset: [f64; 6],
    slope_g: [f64; 6],
    slope_c: [f64; 6],
}

impl AffineModel {
    fn build(circuit: &CircuitModel, bunching: Bunching) -> Result<Self> {
        let u = circuit.unitary();
        let prob = |row: usize, col: usize| u.get(row, col).norm_sqr();
        let two_arm = |c: f64, l: usize, m: usize| -> Result<f64> {
            let inputs = [
                (LONG_ARM, InternalState::new(0, c, 0.0, 0.0)),
                (SHORT_ARM, InternalState::new(1, c, 0.0, 0.0)),
            ];
            circuit.output_pattern_probability(
                &inputs,
                &OccupationPattern::from_modes(N_MODES, &[l, m])?,
            )
        };
        let mut model = AffineModel {
            offset: [0.0; 6],
            slope_g: [0.0; 6],
            slope_c: [0.0; 6],
        };
        for (p, &(l, m)) in PAIRS.iter().enumerate() {
            let q = |k: usize| 0.5 * (prob(k, LONG_ARM) + prob(k, SHORT_ARM));
            let norm = q(l) * q(m);
            if norm <= 0.0 {
                return Err(invalid(format!("detector pair {p} receives no light")));
            }
            let same = 2.0 * (prob(l, LONG_ARM) * prob(m, LONG_ARM)
                + prob(l, SHORT_ARM) * prob(m, SHORT_ARM));
            let p0 = two_arm(0.0, l, m)?;
            let p1 = two_arm(1.0, l, m)?;
            model.slope_g[p] = bunching.zeta0 / 8.0 * same / norm;
            model.offset[p] = bunching.zeta_delay / 4.0 * p0 / norm;
            model.slope_c[p] = bunching.zeta_delay / 4.0 * (p1 - p0) / norm;
        }
        Ok(model)
    }

    fn predict(&self, g: f64, c: f64) -> [f64; 6] {
        std::array::from_fn(|p| self.offset[p] + g * self.slope_g[p] + c * self.slope_c[p])
    }
}

/// Predicted zero-lag correlations for the given source parameters.
pub fn predict_matrix(
    g2_hbt0: f64,
    coherence: f64,
    circuit: &CircuitModel,
    bunching: Bunching,
) -> Result<[f64; 6]> {
    Ok(AffineModel::build(circuit, bunching)?.predict(g2_hbt0, coherence))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub g2_hbt0: Estimate,
    pub coherence: Estimate,
    /// Covariance of `(g2_hbt0, C)`.
    pub covariance: [[f64; 2]; 2],
    pub chi2: f64,
    pub dof: usize,
    /// The optimum touches the edge of the allowed box, so the quadratic
    /// error estimate is unreliable.
    pub at_boundary: bool,
}

/// Weighted least-squares fit of `(g2_hbt0, C)` within
/// `[0, 2] x [0, 1]`.
pub fn fit(matrix: &CorrelationMatrix, circuit: &CircuitModel, bunching: Bunching) -> Result<FitResult> {
    if let Some(p) = (0..6).find(|&p| !(matrix.sigmas[p] > 0.0) || !matrix.values[p].is_finite()) {
        return Err(invalid(format!("pair {p} has unusable value or sigma")));
    }
    let model = AffineModel::build(circuit, bunching)?;
    let chi2 = |x: &[f64]| -> f64 {
        let pred = model.predict(x[0], x[1]);
        (0..6)
            .map(|p| ((matrix.values[p] - pred[p]) / matrix.sigmas[p]).powi(2))
            .sum()
    };

    let grid = 20;
    let mut start = [0.0, 0.0];
    let mut best = f64::INFINITY;
    for i in 0..=grid {
        for k in 0..=grid {
            let x = [
                G2_RANGE.0 + (G2_RANGE.1 - G2_RANGE.0) * i as f64 / grid as f64,
                C_RANGE.0 + (C_RANGE.1 - C_RANGE.0) * k as f64 / grid as f64,
            ];
            let v = chi2(&x);
            if v < best {
                best = v;
                start = x;
            }
        }
    }
    let opts = NelderMeadOptions {
        step: vec![0.05, 0.025],
        x_tol: 1e-10,
        max_iter: 10_000,
    };
    let (lower, upper) = ([G2_RANGE.0, C_RANGE.0], [G2_RANGE.1, C_RANGE.1]);
    let mut min = nelder_mead(chi2, &start, &lower, &upper, &opts)?;
    // A simplex can stall in a narrow valley; restart from a fresh one
    // until the minimum stops improving.
    for _ in 0..20 {
        let again = nelder_mead(chi2, &min.x, &lower, &upper, &opts)?;
        let improved = again.value < min.value - 1e-12 * (1.0 + min.value.abs());
        min = again;
        if !improved {
            break;
        }
    }

    // chi2 is quadratic in the parameters: its Hessian is 2 J^T W J and the
    // covariance is 2 H^-1.
    let mut info = [[0.0; 2]; 2];
    for p in 0..6 {
        let w = 1.0 / (matrix.sigmas[p] * matrix.sigmas[p]);
        let j = [model.slope_g[p], model.slope_c[p]];
        for r in 0..2 {
            for c in 0..2 {
                info[r][c] += w * j[r] * j[c];
            }
        }
    }
    let covariance = invert_2x2(info).unwrap_or([[f64::INFINITY, 0.0], [0.0, f64::INFINITY]]);
    let (g, c) = (min.x[0], min.x[1]);
    let edge = 1e-6;
    let at_boundary = g - G2_RANGE.0 < edge
        || G2_RANGE.1 - g < edge
        || c - C_RANGE.0 < edge
        || C_RANGE.1 - c < edge;
    Ok(FitResult {
        g2_hbt0: Estimate {
            value: g,
            sigma: covariance[0][0].sqrt(),
            clamped: at_boundary,
        },
        coherence: Estimate {
            value: c,
            sigma: covariance[1][1].sqrt(),
            clamped: at_boundary,
        },
        covariance,
        chi2: min.value,
        dof: 6 - 2,
        at_boundary,
    })
}

/// Fit with count-based weights taken from the model rather than the data.
///
/// Weighting by measured counts favours bins that fluctuated low. After an
/// initial fit, each sigma is rescaled by `sqrt(predicted / measured)` (the
/// Poisson error of the predicted count) and the fit is repeated until the
/// weights settle.
pub fn fit_poisson(
    matrix: &CorrelationMatrix,
    circuit: &CircuitModel,
    bunching: Bunching,
) -> Result<FitResult> {
    let mut result = fit(matrix, circuit, bunching)?;
    for _ in 0..5 {
        let pred = predict_matrix(result.g2_hbt0.value, result.coherence.value, circuit, bunching)?;
        let mut reweighted = *matrix;
        for p in 0..6 {
            let v = matrix.values[p];
            if v > 0.0 && pred[p] > 0.0 {
                reweighted.sigmas[p] = matrix.sigmas[p] * (pred[p] / v).sqrt();
            }
        }
        let next = fit(&reweighted, circuit, bunching)?;
        let moved = (next.g2_hbt0.value - result.g2_hbt0.value).abs()
            + (next.coherence.value - result.coherence.value).abs();
        result = next;
        if moved < 1e-9 {
            break;
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::BeamsplitterParams;

    fn unbalanced() -> CircuitModel {
        let bs = |r: f64| BeamsplitterParams::new(r.sqrt(), (1.0 - r).sqrt()).unwrap();
        let mut c = CircuitModel::new(bs(0.45), bs(0.55), bs(0.4), 4).unwrap();
        c.validate().unwrap();
        c
    }

    #[test]
    fn balanced_prediction_matches_two_value_model() {
        let circuit = CircuitModel::balanced(4);
        let b = Bunching {
            zeta0: 1.34,
            zeta_delay: 1.1,
        };
        let (g, c) = (0.05, 0.6);
        let pred = predict_matrix(g, c, &circuit, b).unwrap();
        let auto = b.zeta0 * g / 2.0 + b.zeta_delay * (1.0 + c) / 2.0;
        let cross = b.zeta0 * g / 2.0 + b.zeta_delay * (1.0 - c) / 2.0;
        for p in 0..2 {
            assert!((pred[p] - auto).abs() < 1e-12, "{pred:?}");
        }
        for p in 2..6 {
            assert!((pred[p] - cross).abs() < 1e-12, "{pred:?}");
        }
    }

    #[test]
    fn noise_free_fit_recovers_truth_on_unbalanced_circuit() {
        let circuit = unbalanced();
        let pred = predict_matrix(0.08, 0.7, &circuit, Bunching::NONE).unwrap();
        let m = CorrelationMatrix {
            values: pred,
            sigmas: [0.01; 6],
        };
        let r = fit(&m, &circuit, Bunching::NONE).unwrap();
        assert!((r.g2_hbt0.value - 0.08).abs() < 1e-7);
        assert!((r.coherence.value - 0.7).abs() < 1e-7);
        assert!(r.chi2 < 1e-10);
        assert!(!r.at_boundary);
    }

    #[test]
    fn boundary_is_flagged() {
        let circuit = CircuitModel::balanced(4);
        let mut pred = predict_matrix(0.0, 1.0, &circuit, Bunching::NONE).unwrap();
        pred[0] += 0.05;
        pred[1] += 0.05;
        let m = CorrelationMatrix {
            values: pred,
            sigmas: [0.01; 6],
        };
        let r = fit(&m, &circuit, Bunching::NONE).unwrap();
        assert!(r.at_boundary);
        assert!(r.coherence.value <= 1.0);
    }
}
