//! Turning zero-lag correlations into `g2_hbt(0)`, `C` and `V`.

use serde::Serialize;

use super::bunching::{fit_zeta, quad_form, LagPoint, PlateauModel, ZetaFit};
use super::correlate::{correlate, port_coincidence, CorrelationSet, Estimate};
use crate::error::{Error, Result};
use crate::simulate::{ClickStream, DETECTORS};

/// Results of the single-measurement analysis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sg2Extraction {
    pub g2_hbt0: Estimate,
    pub coherence: Estimate,
    pub visibility: Estimate,
    pub warnings: Vec<String>,
}

/// Inverts the zero-lag relations
///
/// ```text
/// auto  = zeta(0) g / 2 + zeta(d) (1 + C) / 2
/// cross = zeta(0) g / 2 + zeta(d) (1 - C) / 2
/// ```
///
/// for `g = g2_hbt(0)` and `C`, propagating the errors of both inputs and
/// of the bunching fit to first order. Out-of-range results are clamped
/// (`g >= 0`, `0 <= C <= 1`) and flagged.
pub fn extract_sg2(auto0: Estimate, cross0: Estimate, zeta: &ZetaFit, delay: u64) -> Sg2Extraction {
    let z0 = zeta.zeta0.value;
    let (zd, dzd) = zeta.zeta_with_gradient(delay as i64);
    let (a, x) = (auto0.value, cross0.value);

    let g = (a + x - zd) / z0;
    let c = (a - x) / zd;
    let v = c / (1.0 + g);

    // Gradients in (auto, cross) and in (zeta0, tau1).
    let dg_ax = [1.0 / z0, 1.0 / z0];
    let dg_z = [-dzd[0] / z0 - g / z0, -dzd[1] / z0];
    let dc_ax = [1.0 / zd, -1.0 / zd];
    let dc_z = [-c * dzd[0] / zd, -c * dzd[1] / zd];
    let dv = |dc: f64, dg: f64| dc / (1.0 + g) - c * dg / ((1.0 + g) * (1.0 + g));
    let dv_ax = [dv(dc_ax[0], dg_ax[0]), dv(dc_ax[1], dg_ax[1])];
    let dv_z = [dv(dc_z[0], dg_z[0]), dv(dc_z[1], dg_z[1])];

    let cov = zeta.usable_covariance();
    let sigma = |ax: [f64; 2], z: [f64; 2]| {
        (ax[0] * ax[0] * auto0.sigma * auto0.sigma
            + ax[1] * ax[1] * cross0.sigma * cross0.sigma
            + quad_form(&z, &cov))
        .sqrt()
    };

    let g2_hbt0 = Estimate::new(g, sigma(dg_ax, dg_z)).clamp(0.0, f64::INFINITY);
    let coherence = Estimate::new(c, sigma(dc_ax, dc_z)).clamp(0.0, 1.0);
    let visibility = Estimate::new(v, sigma(dv_ax, dv_z)).clamp(0.0, 1.0);

    let mut warnings = Vec::new();
    if g2_hbt0.clamped {
        warnings.push(format!("g2_hbt(0) estimate {g:.4} was negative; clamped to 0"));
    }
    if coherence.clamped {
        warnings.push(format!("indistinguishability estimate {c:.4} outside [0, 1]; clamped"));
    }
    Sg2Extraction {
        g2_hbt0,
        coherence,
        visibility,
        warnings,
    }
}

/// `V = C / (1 + g2_hbt(0))` for independent inputs.
pub fn visibility(g2_hbt0: Estimate, coherence: Estimate) -> Estimate {
    let d = 1.0 + g2_hbt0.value;
    let v = coherence.value / d;
    let s = ((coherence.sigma / d).powi(2) + (v / d * g2_hbt0.sigma).powi(2)).sqrt();
    Estimate::new(v, s)
}

/// Indistinguishability from separate HBT and HOM measurements,
/// `C = 1 + g2_hbt(0) - 2 g2_hom(0)`.
pub fn traditional_coalescence(g2_hbt0: Estimate, g2_hom0: Estimate) -> Estimate {
    Estimate::new(
        1.0 + g2_hbt0.value - 2.0 * g2_hom0.value,
        (g2_hbt0.sigma.powi(2) + 4.0 * g2_hom0.sigma.powi(2)).sqrt(),
    )
}

/// Visibility from co- and cross-polarized HOM runs,
/// `V = 1 - g2_co(0) / g2_cross(0)`.
pub fn hwp_visibility(g2_co: Estimate, g2_cross: Estimate) -> Estimate {
    let r = g2_co.value / g2_cross.value;
    let s = r * ((g2_co.sigma / g2_co.value).powi(2) + (g2_cross.sigma / g2_cross.value).powi(2))
        .sqrt();
    Estimate::new(1.0 - r, if s.is_finite() { s } else { g2_co.sigma / g2_cross.value })
}

/// Bins with `0 < |j| <= max_lag`, skipping `excluded`, from `series`.
pub fn plateau_points(
    set: &CorrelationSet,
    excluded: &[i64],
    series: impl Fn(i64) -> Estimate,
) -> Vec<LagPoint> {
    set.lags()
        .filter(|&j| j != 0 && !excluded.contains(&j))
        .map(|j| {
            let e = series(j);
            LagPoint {
                lag: j,
                value: e.value,
                sigma: e.sigma,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HbtExtraction {
    pub g2_hbt0: Estimate,
    /// Six-pair average at zero lag before the bunching correction.
    pub raw_zero_lag: Estimate,
    pub zeta: ZetaFit,
}

/// `g2_hbt(0)` from a run with the interferometer bypassed: every pair sees
/// the same photon statistics, so the zero-lag six-pair average is
/// `zeta0 g2_hbt(0)` and the off-zero bins trace `zeta(j)` directly.
pub fn hbt_from_bypass(stream: &ClickStream, max_lag: usize) -> Result<HbtExtraction> {
    let set = correlate(stream, max_lag)?;
    hbt_from_correlations(&set)
}

pub fn hbt_from_correlations(set: &CorrelationSet) -> Result<HbtExtraction> {
    let zeta = fit_zeta(
        &plateau_points(set, &[], |j| set.all_pairs(j)),
        PlateauModel::Direct,
    )?;
    let raw = set.all_pairs(0);
    let z0 = zeta.zeta0.value;
    let g = raw.value / z0;
    let sigma = ((raw.sigma / z0).powi(2) + (g / z0 * zeta.zeta0.sigma).powi(2)).sqrt();
    Ok(HbtExtraction {
        g2_hbt0: Estimate::new(g, sigma),
        raw_zero_lag: raw,
        zeta,
    })
}

/// Conventional zero-lag HOM correlation with each BS2 port read as a
/// single detector.
pub fn hom_from_stream(stream: &ClickStream) -> Result<Estimate> {
    Ok(port_coincidence(stream)?.g2())
}

/// Zero-lag same-port and split-port correlations from a stream recorded
/// with number-resolving port detectors.
///
/// With `u1`, `u2` the probabilities of at least one photon per port, the
/// same-port value counts pulses with a photon pair in either port and the
/// split-port value counts pulses with a photon in each port, both over
/// `n u1 u2`. These coincide with the six-detector averages of an ideal
/// emulated readout.
pub fn pnr_zero_lag(stream: &ClickStream) -> Result<(Estimate, Estimate)> {
    let singles = stream.singles();
    for k in [0, 2] {
        if singles[k] == 0 {
            return Err(Error::ZeroSingles(DETECTORS[k]));
        }
    }
    let n = stream.n_pulses() as f64;
    let norm = n * (singles[0] as f64 / n) * (singles[2] as f64 / n);
    let (mut same, mut split) = (0u64, 0u64);
    for r in stream.records() {
        if r.fired(1) || r.fired(3) {
            same += 1;
        }
        if r.fired(0) && r.fired(2) {
            split += 1;
        }
    }
    let est = |c: u64| {
        let c = c as f64;
        let v = c / norm;
        let rel = 1.0 / singles[0] as f64 + 1.0 / singles[2] as f64;
        Estimate::new(v, (c.max(1.0) / (norm * norm) + v * v * rel).sqrt())
    };
    Ok((est(same), est(split)))
}
