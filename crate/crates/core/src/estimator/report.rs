//! Full analysis of one click stream and its serialized report.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::bunching::{fit_zeta, PlateauModel, ZetaFit};
use super::correlate::{correlate, pair_name, CorrelationSet, Estimate, PAIRS};
use super::extract::{extract_sg2, hbt_from_correlations, plateau_points, pnr_zero_lag};
use super::photon_number::{reconstruct_fock, three_fold_efficiency, FockInputs};
use crate::circuit::CircuitModel;
use crate::error::{invalid, Error, Result};
use crate::fitter::{self, Bunching, CorrelationMatrix, FitResult};
use crate::simulate::{ClickStream, Detection, ExperimentConfig, Mode};
use crate::TOOL_VERSION;

/// Everything the analysis needs to know about how a stream was recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub mode: Mode,
    pub detection: Detection,
    pub circuit: CircuitModel,
    pub max_lag: usize,
    pub efficiency: f64,
    pub pulse_rate_hz: f64,
    /// One minus the confidence level of the three-photon bound.
    pub alpha: f64,
}

impl AnalysisOptions {
    pub const DEFAULT_ALPHA: f64 = 0.05;

    pub fn from_config(config: &ExperimentConfig, max_lag: usize) -> Self {
        AnalysisOptions {
            mode: config.mode,
            detection: config.detection,
            circuit: config.circuit.clone(),
            max_lag,
            efficiency: config.efficiency,
            pulse_rate_hz: config.source.pulse_rate_hz(),
            alpha: Self::DEFAULT_ALPHA,
        }
    }

    pub fn delay(&self) -> u64 {
        self.circuit.delay_pulses
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LagValue {
    pub j: i64,
    pub value: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FockReport {
    pub p: Vec<f64>,
    pub p3_is_upper_bound: bool,
    pub alpha: f64,
    pub three_fold_efficiency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThirdOrder {
    /// Pulses with three or more detectors firing.
    pub triples: u64,
    /// Pulses with all four detectors firing.
    pub quadruples: u64,
    pub n_trials: u64,
}

/// Serialized result of `analyze`. Field order is the JSON key order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sg2Report {
    pub tool_version: String,
    pub config_hash: String,
    pub mode: Mode,
    pub detection: Detection,
    pub n_pulses: u64,
    pub delay_pulses: u64,
    pub max_lag: usize,
    /// Click probability per pulse for detectors A-D.
    pub singles: [f64; 4],
    pub g2_hbt0: Estimate,
    #[serde(rename = "C")]
    pub coherence: Option<Estimate>,
    #[serde(rename = "V")]
    pub visibility: Option<Estimate>,
    pub zeta: ZetaFit,
    pub fock: FockReport,
    pub zero_lag: BTreeMap<String, Estimate>,
    pub g2_auto: Vec<LagValue>,
    pub g2_cross: Vec<LagValue>,
    pub third_order: ThirdOrder,
    pub warnings: Vec<String>,
    pub boson_fit: Option<FitResult>,
}

impl Sg2Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Analysis output together with the raw correlations it was built from.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: Sg2Report,
    pub correlations: CorrelationSet,
}

/// Runs the full single-stream analysis.
pub fn analyze(stream: &ClickStream, opts: &AnalysisOptions) -> Result<Analysis> {
    let delay = opts.delay();
    if opts.mode.uses_interferometer() && opts.max_lag as u64 <= delay + 2 {
        return Err(invalid(format!(
            "max lag {} must exceed the delay {delay} by at least 3",
            opts.max_lag
        )));
    }
    let set = correlate(stream, opts.max_lag)?;
    let mut warnings = Vec::new();

    let (g2_hbt0, coherence, visibility, zeta, boson_fit) = if opts.mode.uses_interferometer() {
        let d = delay as i64;
        let model = PlateauModel::Interferometer { delay };
        let points = match opts.detection {
            // Only the at-least-one-photon bits carry a useful plateau.
            Detection::NumberResolving => plateau_points(&set, &[d, -d], |j| set.mean_over(&[2], j)),
            Detection::Emulated => plateau_points(&set, &[d, -d], |j| set.all_pairs(j)),
        };
        let zeta = fit_zeta(&points, model)?;
        let (auto0, cross0) = match opts.detection {
            Detection::NumberResolving => pnr_zero_lag(stream)?,
            Detection::Emulated => (set.auto(0), set.cross(0)),
        };
        let ex = extract_sg2(auto0, cross0, &zeta, delay);
        warnings.extend(ex.warnings.iter().cloned());
        let boson_fit = if opts.detection == Detection::Emulated {
            let bunching = Bunching {
                zeta0: zeta.zeta0.value,
                zeta_delay: zeta.zeta(d),
            };
            match fitter::fit_poisson(&CorrelationMatrix::from_correlations(&set), &opts.circuit, bunching) {
                Ok(f) => {
                    if f.at_boundary {
                        warnings.push("six-pair fit optimum lies on the parameter boundary".into());
                    }
                    Some(f)
                }
                Err(Error::NoConvergence { iterations, .. }) => {
                    warnings.push(format!("six-pair fit did not converge in {iterations} iterations"));
                    None
                }
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        (
            ex.g2_hbt0,
            Some(ex.coherence),
            Some(ex.visibility),
            zeta,
            boson_fit,
        )
    } else {
        let hbt = hbt_from_correlations(&set)?;
        (hbt.g2_hbt0, None, None, hbt.zeta, None)
    };

    if !zeta.tau1_identified {
        warnings.push("bunching amplitude consistent with zero; tau1 not identified".into());
    }
    if zeta.dof > 0 && zeta.chi2 / zeta.dof as f64 > 3.0 {
        warnings.push(format!(
            "bunching fit chi2/dof = {:.2}; plateau model may not describe the data",
            zeta.chi2 / zeta.dof as f64
        ));
    }

    let n = stream.n_pulses();
    let singles = set.single_probabilities();
    let triples = stream.multiplicity(3) + stream.multiplicity(4);
    let quadruples = stream.multiplicity(4);
    let eps3 = three_fold_efficiency(&opts.circuit, opts.mode, opts.efficiency)?;
    let rate = singles.iter().sum::<f64>() * opts.pulse_rate_hz;
    let fock = reconstruct_fock(&FockInputs {
        singles_rate_hz: rate,
        pulse_rate_hz: opts.pulse_rate_hz,
        efficiency: opts.efficiency,
        g2_hbt0: g2_hbt0.value,
        triples,
        n_trials: n,
        three_fold_efficiency: eps3,
        alpha: opts.alpha,
    })?;
    if opts.detection == Detection::NumberResolving {
        warnings.push(
            "number-resolving readout: singles and triples count port bits, not detectors".into(),
        );
    }

    let series = |f: &dyn Fn(i64) -> Estimate| -> Vec<LagValue> {
        set.lags()
            .map(|j| {
                let e = f(j);
                LagValue {
                    j,
                    value: e.value,
                    sigma: e.sigma,
                }
            })
            .collect()
    };
    let report = Sg2Report {
        tool_version: TOOL_VERSION.to_string(),
        config_hash: stream.config_hash_hex(),
        mode: opts.mode,
        detection: opts.detection,
        n_pulses: n,
        delay_pulses: delay,
        max_lag: opts.max_lag,
        singles,
        g2_hbt0,
        coherence,
        visibility,
        zeta,
        fock: FockReport {
            p: fock.probabilities().to_vec(),
            p3_is_upper_bound: fock.p3_is_upper_bound(),
            alpha: opts.alpha,
            three_fold_efficiency: eps3,
        },
        zero_lag: (0..PAIRS.len()).map(|p| (pair_name(p), set.g2(p, 0))).collect(),
        g2_auto: series(&|j| set.auto(j)),
        g2_cross: series(&|j| set.cross(j)),
        third_order: ThirdOrder {
            triples,
            quadruples,
            n_trials: n,
        },
        warnings,
        boson_fit,
    };
    Ok(Analysis {
        report,
        correlations: set,
    })
}

/// Writes every pair and lag as `pair,j,g2,raw_counts`, preceded by a
/// comment line naming the tool version and configuration hash.
pub fn write_correlation_csv<W: Write>(
    set: &CorrelationSet,
    config_hash: &str,
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "# {TOOL_VERSION} config_hash={config_hash}")?;
    writeln!(w, "pair,j,g2,raw_counts")?;
    for p in 0..PAIRS.len() {
        let name = pair_name(p);
        for j in set.lags() {
            writeln!(w, "{name},{j},{:.9},{}", set.g2(p, j).value, set.count(p, j))?;
        }
    }
    Ok(())
}

/// Checks that `stream` was produced by `config`. On mismatch, names the
/// mode whose configuration would have matched, if any.
pub fn verify_stream_origin(stream: &ClickStream, config: &ExperimentConfig) -> Result<()> {
    if stream.config_hash() == &config.hash() {
        return Ok(());
    }
    let other = Mode::ALL.into_iter().find(|&m| {
        let mut c = config.clone();
        c.mode = m;
        stream.config_hash() == &c.hash()
    });
    Err(Error::ConfigMismatch(match other {
        Some(m) => format!(
            "stream was recorded in mode {}, but the configuration says {}",
            m.as_str(),
            config.mode.as_str()
        ),
        None => format!(
            "stream hash {} does not match configuration hash {}",
            stream.config_hash_hex(),
            config.hash_hex()
        ),
    }))
}
