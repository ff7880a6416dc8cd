//! Fit of the slow bunching envelope `zeta(k) = 1 + (zeta0 - 1) exp(-|k| / tau1)`
//! to off-zero correlation bins.
//!
//! For a fixed `tau1` the model is linear in `zeta0 - 1`, so the amplitude
//! is solved in closed form and only `tau1` is searched (a scan on a log
//! grid followed by golden-section refinement).

use serde::Serialize;

use super::correlate::Estimate;
use crate::error::{invalid, Result};
use crate::fock::zeta;
use crate::optimize::{golden_section, invert_2x2};

/// How the bunching envelope shows up in the fitted bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PlateauModel {
    /// Bins measure `zeta(j)` directly (single path to the detectors).
    Direct,
    /// Bins come from an unbalanced interferometer with the given delay:
    /// each photon takes either arm, so a lag-`j` bin mixes photon
    /// separations `j`, `j + d` and `j - d` with weights 1/2, 1/4, 1/4.
    Interferometer { delay: u64 },
}

impl PlateauModel {
    /// Envelope shape `h(j)` such that the bin value is `1 + (zeta0 - 1) h(j)`,
    /// and its derivative with respect to `tau1`.
    fn shape(&self, j: i64, tau1: f64) -> (f64, f64) {
        let term = |k: i64| {
            let x = k.unsigned_abs() as f64;
            let e = (-x / tau1).exp();
            (e, e * x / (tau1 * tau1))
        };
        match *self {
            PlateauModel::Direct => term(j),
            PlateauModel::Interferometer { delay } => {
                let d = delay as i64;
                let (a, da) = term(j);
                let (b, db) = term(j + d);
                let (c, dc) = term(j - d);
                (0.5 * a + 0.25 * (b + c), 0.5 * da + 0.25 * (db + dc))
            }
        }
    }

    /// Expected bin value.
    pub fn predict(&self, j: i64, zeta0: f64, tau1: f64) -> f64 {
        1.0 + (zeta0 - 1.0) * self.shape(j, tau1).0
    }
}

/// One correlation bin used in the fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagPoint {
    pub lag: i64,
    pub value: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZetaFit {
    pub zeta0: Estimate,
    pub tau1: Estimate,
    /// Covariance of `(zeta0, tau1)`.
    pub covariance: [[f64; 2]; 2],
    pub chi2: f64,
    pub dof: usize,
    /// False when the amplitude is consistent with zero, in which case
    /// `tau1` carries no information and its error is reported as infinite.
    pub tau1_identified: bool,
    pub model: PlateauModel,
}

impl ZetaFit {
    /// Fit result for a source with no slow bunching.
    pub fn none(model: PlateauModel) -> Self {
        ZetaFit {
            zeta0: Estimate::new(1.0, 0.0),
            tau1: Estimate::new(1.0, f64::INFINITY),
            covariance: [[0.0, 0.0], [0.0, f64::INFINITY]],
            chi2: 0.0,
            dof: 0,
            tau1_identified: false,
            model,
        }
    }

    pub fn zeta(&self, k: i64) -> f64 {
        zeta(k, self.zeta0.value, self.tau1.value)
    }

    /// `zeta(k)` and its gradient with respect to `(zeta0, tau1)`.
    pub fn zeta_with_gradient(&self, k: i64) -> (f64, [f64; 2]) {
        let x = k.unsigned_abs() as f64;
        let tau = self.tau1.value;
        let e = (-x / tau).exp();
        let d_tau = if self.tau1_identified {
            (self.zeta0.value - 1.0) * e * x / (tau * tau)
        } else {
            0.0
        };
        (self.zeta(k), [e, d_tau])
    }

    /// Variance of `zeta(k)` from the fit covariance.
    pub fn zeta_variance(&self, k: i64) -> f64 {
        let (_, g) = self.zeta_with_gradient(k);
        quad_form(&g, &self.usable_covariance())
    }

    /// Covariance with the `tau1` block zeroed when it is not identified
    /// (its gradient then vanishes as well).
    pub fn usable_covariance(&self) -> [[f64; 2]; 2] {
        if self.tau1_identified {
            self.covariance
        } else {
            [[self.covariance[0][0], 0.0], [0.0, 0.0]]
        }
    }
}

pub(crate) fn quad_form(g: &[f64; 2], c: &[[f64; 2]; 2]) -> f64 {
    g[0] * g[0] * c[0][0] + 2.0 * g[0] * g[1] * c[0][1] + g[1] * g[1] * c[1][1]
}

/// Weighted fit of `points` to the plateau model.
///
/// `zeta0` is constrained to be at least one. Needs at least three points
/// with positive uncertainty.
pub fn fit_zeta(points: &[LagPoint], model: PlateauModel) -> Result<ZetaFit> {
    if points.len() < 3 {
        return Err(invalid(format!(
            "bunching fit needs at least 3 lag bins, got {}",
            points.len()
        )));
    }
    if let Some(p) = points.iter().find(|p| !(p.sigma > 0.0) || !p.value.is_finite()) {
        return Err(invalid(format!("lag {} has unusable value/sigma", p.lag)));
    }
    let max_lag = points.iter().map(|p| p.lag.unsigned_abs()).max().unwrap_or(1) as f64;

    let profile = |tau: f64| -> (f64, f64) {
        let (mut num, mut den) = (0.0, 0.0);
        for p in points {
            let w = 1.0 / (p.sigma * p.sigma);
            let h = model.shape(p.lag, tau).0;
            num += w * h * (p.value - 1.0);
            den += w * h * h;
        }
        let a = if den > 0.0 { (num / den).max(0.0) } else { 0.0 };
        let chi2 = points
            .iter()
            .map(|p| {
                let r = (p.value - 1.0 - a * model.shape(p.lag, tau).0) / p.sigma;
                r * r
            })
            .sum();
        (a, chi2)
    };

    let (lo, hi) = (0.05f64.ln(), (20.0 * max_lag.max(1.0)).ln());
    let steps = 240;
    let grid: Vec<f64> = (0..=steps)
        .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
        .collect();
    let best = grid
        .iter()
        .enumerate()
        .map(|(i, &s)| (i, profile(s.exp()).1))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let left = grid[best.saturating_sub(1)];
    let right = grid[(best + 1).min(steps)];
    let log_tau = golden_section(|s| profile(s.exp()).1, left, right, 1e-9);
    let tau = log_tau.exp();
    let (a, chi2) = profile(tau);

    // Fisher information in (zeta0, tau1).
    let mut fisher = [[0.0; 2]; 2];
    for p in points {
        let w = 1.0 / (p.sigma * p.sigma);
        let (h, dh) = model.shape(p.lag, tau);
        let g = [h, a * dh];
        for r in 0..2 {
            for c in 0..2 {
                fisher[r][c] += w * g[r] * g[c];
            }
        }
    }
    let sigma_amp_only = 1.0 / fisher[0][0].sqrt();
    let joint = invert_2x2(fisher).filter(|c| c[0][0] >= 0.0 && c[1][1] >= 0.0);
    let identified = a > 3.0 * sigma_amp_only && joint.is_some();
    let covariance = match (identified, joint) {
        (true, Some(c)) => c,
        _ => [[sigma_amp_only * sigma_amp_only, 0.0], [0.0, f64::INFINITY]],
    };
    let zeta0 = Estimate {
        value: 1.0 + a,
        sigma: covariance[0][0].sqrt(),
        clamped: a == 0.0,
    };
    let tau1 = Estimate::new(tau, covariance[1][1].sqrt());
    Ok(ZetaFit {
        zeta0,
        tau1,
        covariance,
        chi2,
        dof: points.len().saturating_sub(2),
        tau1_identified: identified,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn synthetic(model: PlateauModel, zeta0: f64, tau1: f64, lags: &[i64]) -> Vec<LagPoint> {
        lags.iter()
            .map(|&lag| LagPoint {
                lag,
                value: model.predict(lag, zeta0, tau1),
                sigma: 0.01,
            })
            .collect()
    }

    fn lags(max: i64, skip: &[i64]) -> Vec<i64> {
        (-max..=max).filter(|j| !skip.contains(j)).collect()
    }

    #[test]
    fn recovers_noise_free_direct() {
        let pts = synthetic(PlateauModel::Direct, 1.34, 3.64, &lags(20, &[0]));
        let fit = fit_zeta(&pts, PlateauModel::Direct).unwrap();
        assert!((fit.zeta0.value - 1.34).abs() < 1e-6);
        assert!((fit.tau1.value - 3.64).abs() < 1e-5);
        assert!(fit.tau1_identified);
        assert!(fit.chi2 < 1e-8);
    }

    #[test]
    fn recovers_noise_free_interferometer() {
        let model = PlateauModel::Interferometer { delay: 4 };
        let pts = synthetic(model, 1.34, 3.64, &lags(20, &[0, 4, -4]));
        let fit = fit_zeta(&pts, model).unwrap();
        assert!((fit.zeta0.value - 1.34).abs() < 1e-6, "{fit:?}");
        assert!((fit.tau1.value - 3.64).abs() < 1e-5);
    }

    #[test]
    fn flat_plateau_leaves_tau_unidentified() {
        let pts = synthetic(PlateauModel::Direct, 1.0, 3.0, &lags(10, &[0]));
        let fit = fit_zeta(&pts, PlateauModel::Direct).unwrap();
        assert_eq!(fit.zeta0.value, 1.0);
        assert!(!fit.tau1_identified);
        assert!(fit.tau1.sigma.is_infinite());
        assert!(fit.zeta_variance(4).is_finite());
    }

    #[test]
    fn rejects_too_few_points() {
        let pts = synthetic(PlateauModel::Direct, 1.2, 2.0, &[1, 2]);
        assert!(fit_zeta(&pts, PlateauModel::Direct).is_err());
    }

    #[test]
    fn sigma_matches_linear_propagation() {
        // With tau1 held at truth, var(zeta0) = 1 / sum(w h^2).
        let model = PlateauModel::Direct;
        let pts = synthetic(model, 1.5, 3.0, &lags(15, &[0]));
        let fit = fit_zeta(&pts, model).unwrap();
        let info: f64 = pts
            .iter()
            .map(|p| {
                let h = (-(p.lag.unsigned_abs() as f64) / 3.0).exp();
                h * h / (p.sigma * p.sigma)
            })
            .sum();
        // Freeing tau1 can only enlarge the error.
        assert!(fit.zeta0.sigma >= 1.0 / info.sqrt() - 1e-12);
    }

    proptest! {
        #[test]
        fn fit_never_goes_below_one(offset in -0.3f64..0.0, tau in 0.5f64..10.0) {
            let pts: Vec<LagPoint> = lags(12, &[0])
                .into_iter()
                .map(|lag| LagPoint {
                    lag,
                    value: 1.0 + offset * (-(lag.unsigned_abs() as f64) / tau).exp(),
                    sigma: 0.02,
                })
                .collect();
            let fit = fit_zeta(&pts, PlateauModel::Direct).unwrap();
            prop_assert!(fit.zeta0.value >= 1.0);
        }
    }
}
