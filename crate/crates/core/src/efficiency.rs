//! Statistical efficiency of the single-measurement method against
//! conventional two-detector measurements.
//!
//! Variances are measured by replication: every replica simulates the
//! relevant experiments with fresh seeds and runs the estimators on the
//! resulting click streams. Variances are reported per trial, that is
//! multiplied by the total pulse budget of the method, so methods that
//! split their budget across several runs are compared fairly.
//!
//! All studies use a number-resolving readout of the interferometer ports;
//! the port bits that report "at least one photon" double as conventional
//! bucket detectors.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::circuit::CircuitModel;
use crate::error::{invalid, Error, Result};
use crate::fock::{FockDistribution, SourceModel};
use crate::rng::replica_seed;
use crate::simulate::{run_experiment, ClickStream, Detection, ExperimentConfig, Mode};
use crate::TOOL_VERSION;

/// Ratio of `C` variances between conventional and number-resolving
/// interferometer readouts when `g2` is known: `2 (g2 + 1) / (g2 + C + 1)`.
pub fn variance_ratio_c(g2: f64, c: f64) -> f64 {
    2.0 * (g2 + 1.0) / (g2 + c + 1.0)
}

/// Measurement strategy whose variances are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// One interferometer run with number-resolving ports yields both `g2`
    /// and `C`.
    Sg2,
    /// Separate HBT and HOM runs with bucket detectors, sharing the budget.
    SantoriTwoStep,
    /// Co- and cross-polarized HOM runs with bucket detectors, sharing the
    /// budget; yields the visibility only (needs `include_hwp`).
    HwpVisibility,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencySettings {
    /// Emission probability per pulse, at unit efficiency.
    pub p1: f64,
    pub efficiency: f64,
    pub delay_pulses: u64,
    pub pulse_period_ns: f64,
    /// Total pulse budget of each method per replica.
    pub n_pulses: u64,
    pub replications: usize,
    /// Share of the two-step budget spent on the HBT run.
    pub hbt_fraction: f64,
    pub seed: u64,
    pub bootstrap_resamples: usize,
    /// Also run the polarization-visibility experiments.
    pub include_hwp: bool,
}

impl Default for EfficiencySettings {
    fn default() -> Self {
        EfficiencySettings {
            p1: 0.029,
            efficiency: 1.0,
            delay_pulses: 4,
            pulse_period_ns: 6.575,
            n_pulses: 1_000_000,
            replications: 100,
            hbt_fraction: 0.5,
            seed: 7,
            bootstrap_resamples: 400,
            include_hwp: true,
        }
    }
}

impl EfficiencySettings {
    pub fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(invalid("need at least two replications"));
        }
        if !(self.hbt_fraction > 0.0 && self.hbt_fraction < 1.0) {
            return Err(invalid("hbt_fraction must lie strictly between 0 and 1"));
        }
        if self.n_pulses < 100 {
            return Err(invalid("pulse budget too small"));
        }
        Ok(())
    }

    fn experiment(&self, g2: f64, c: f64, mode: Mode, n_pulses: u64, seed: u64) -> Result<ExperimentConfig> {
        let fock = FockDistribution::from_brightness(self.p1, g2)?;
        let source = SourceModel::new(fock, c, 1.0, 3.64, self.pulse_period_ns)?;
        let cfg = ExperimentConfig {
            source,
            circuit: CircuitModel::balanced(self.delay_pulses),
            mode,
            detection: Detection::NumberResolving,
            efficiency: self.efficiency,
            dark_prob: 0.0,
            n_pulses,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Zero-lag counts of a number-resolving stream.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PortCounts {
    n: f64,
    /// Pulses with at least one photon in port 1 / port 2.
    u: [f64; 2],
    /// Pulses with a photon pair in one port.
    same: f64,
    /// Pulses with a photon in each port.
    split: f64,
}

impl PortCounts {
    fn from_stream(s: &ClickStream) -> Self {
        let mut c = PortCounts {
            n: s.n_pulses() as f64,
            u: [0.0; 2],
            same: 0.0,
            split: 0.0,
        };
        for r in s.records() {
            c.u[0] += r.fired(0) as u8 as f64;
            c.u[1] += r.fired(2) as u8 as f64;
            c.same += (r.fired(1) || r.fired(3)) as u8 as f64;
            c.split += (r.fired(0) && r.fired(2)) as u8 as f64;
        }
        c
    }

    fn norm(&self) -> f64 {
        self.u[0] * self.u[1] / self.n
    }

    /// Same-port and split-port zero-lag correlations.
    fn auto_cross(&self) -> (f64, f64) {
        (self.same / self.norm(), self.split / self.norm())
    }
}

/// Estimates from one replica of every experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicaEstimates {
    pub sg2_g2: f64,
    pub sg2_c: f64,
    /// Number-resolving `C` with `g2` known.
    pub sg2_c_known_g2: f64,
    /// Bucket-detector `C` from the same interferometer run, `g2` known.
    pub conventional_c_known_g2: f64,
    pub sg2_v: f64,
    pub santori_g2: f64,
    pub santori_c: f64,
    pub hwp_v: f64,
}

fn run_replica(g2: f64, c: f64, s: &EfficiencySettings, index: u64) -> Result<ReplicaEstimates> {
    let seed = replica_seed(s.seed, index);
    let sub = |k: u64| replica_seed(seed, k);
    let n = s.n_pulses;
    let n_hbt = ((n as f64) * s.hbt_fraction).round() as u64;
    let n_hom = n - n_hbt;
    let counts = |mode: Mode, pulses: u64, k: u64| -> Result<PortCounts> {
        let cfg = s.experiment(g2, c, mode, pulses, sub(k))?;
        Ok(PortCounts::from_stream(&run_experiment(&cfg)?))
    };

    let sg2 = counts(Mode::Sg2, n, 0)?;
    let (auto, cross) = sg2.auto_cross();
    let sg2_g2 = auto + cross - 1.0;
    let sg2_c = auto - cross;
    let total = sg2.same + sg2.split;
    let sg2_c_known_g2 = if total > 0.0 {
        (1.0 + g2) * (sg2.same - sg2.split) / total
    } else {
        f64::NAN
    };
    let conventional_c_known_g2 = 1.0 + g2 - 2.0 * cross;

    let hbt = counts(Mode::Hbt, n_hbt, 1)?;
    let santori_g2 = hbt.split / hbt.norm();
    let hom = counts(Mode::Sg2, n_hom, 2)?;
    let santori_c = 1.0 + santori_g2 - 2.0 * hom.split / hom.norm();

    let hwp_v = if s.include_hwp {
        let co = counts(Mode::HomHwpCo, n / 2, 3)?;
        let perp = counts(Mode::HomHwpCross, n - n / 2, 4)?;
        1.0 - (co.split / co.norm()) / (perp.split / perp.norm())
    } else {
        f64::NAN
    };

    Ok(ReplicaEstimates {
        sg2_g2,
        sg2_c,
        sg2_c_known_g2,
        conventional_c_known_g2,
        sg2_v: sg2_c / (1.0 + sg2_g2),
        santori_g2,
        santori_c,
        hwp_v,
    })
}

/// Runs `settings.replications` independent replicas at `(g2, C)`.
pub fn replicate(g2: f64, c: f64, settings: &EfficiencySettings) -> Result<Vec<ReplicaEstimates>> {
    settings.validate()?;
    if !(g2 >= 0.0) || !(0.0..=1.0).contains(&c) {
        return Err(invalid(format!("(g2, C) = ({g2}, {c}) outside the physical range")));
    }
    (0..settings.replications as u64)
        .into_par_iter()
        .map(|r| run_replica(g2, c, settings, r))
        .collect()
}

fn sample_variance(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let (n, sum) = xs.clone().fold((0.0, 0.0), |(n, s), x| (n + 1.0, s + x));
    let mean = sum / n;
    xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Per-trial variances of one method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MethodVariances {
    pub method: Method,
    pub g2: Option<f64>,
    pub coherence: Option<f64>,
    pub visibility: Option<f64>,
}

/// Per-trial sample variances of a method's estimates.
pub fn method_variances(
    replicas: &[ReplicaEstimates],
    method: Method,
    n_pulses: u64,
) -> MethodVariances {
    let scale = n_pulses as f64;
    let var = |f: fn(&ReplicaEstimates) -> f64| Some(scale * sample_variance(replicas.iter().map(f)));
    match method {
        Method::Sg2 => MethodVariances {
            method,
            g2: var(|r| r.sg2_g2),
            coherence: var(|r| r.sg2_c),
            visibility: var(|r| r.sg2_v),
        },
        Method::SantoriTwoStep => MethodVariances {
            method,
            g2: var(|r| r.santori_g2),
            coherence: var(|r| r.santori_c),
            visibility: None,
        },
        Method::HwpVisibility => MethodVariances {
            method,
            g2: None,
            coherence: None,
            visibility: var(|r| r.hwp_v),
        },
    }
}

/// Replicates and returns per-trial variances for `method`.
pub fn empirical_variances(
    g2: f64,
    c: f64,
    settings: &EfficiencySettings,
    method: Method,
) -> Result<MethodVariances> {
    let replicas = replicate(g2, c, settings)?;
    Ok(method_variances(&replicas, method, settings.n_pulses))
}

/// A ratio of two statistics of the replicas, with a bootstrap error.
fn bootstrap_ratio(
    replicas: &[ReplicaEstimates],
    ratio: impl Fn(&[&ReplicaEstimates]) -> f64,
    resamples: usize,
    seed: u64,
) -> (f64, f64) {
    let all: Vec<&ReplicaEstimates> = replicas.iter().collect();
    let value = ratio(&all);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(resamples);
    let mut pick: Vec<&ReplicaEstimates> = Vec::with_capacity(all.len());
    for _ in 0..resamples {
        pick.clear();
        pick.extend((0..all.len()).map(|_| all[rng.random_range(0..all.len())]));
        let r = ratio(&pick);
        if r.is_finite() {
            draws.push(r);
        }
    }
    let sigma = if draws.len() > 1 {
        sample_variance(draws.iter().copied()).sqrt()
    } else {
        f64::NAN
    };
    (value, sigma)
}

fn var_of(rs: &[&ReplicaEstimates], f: impl Fn(&ReplicaEstimates) -> f64) -> f64 {
    sample_variance(rs.iter().map(|r| f(r)))
}

/// `sigma^2(C_conventional) / sigma^2(C_Sg2)` with `g2` known, and its
/// bootstrap error.
pub fn empirical_ratio_c(replicas: &[ReplicaEstimates], settings: &EfficiencySettings) -> (f64, f64) {
    bootstrap_ratio(
        replicas,
        |rs| var_of(rs, |r| r.conventional_c_known_g2) / var_of(rs, |r| r.sg2_c_known_g2),
        settings.bootstrap_resamples,
        settings.seed ^ 0x5EED_C0DE,
    )
}

/// Ratio of scoring functions `sigma^2(g2) + sigma^2(C)`, two-step over
/// Sg2, and its bootstrap error. Both methods use the same budget.
pub fn empirical_scoring_ratio(
    replicas: &[ReplicaEstimates],
    settings: &EfficiencySettings,
) -> (f64, f64) {
    bootstrap_ratio(
        replicas,
        |rs| {
            (var_of(rs, |r| r.santori_g2) + var_of(rs, |r| r.santori_c))
                / (var_of(rs, |r| r.sg2_g2) + var_of(rs, |r| r.sg2_c))
        },
        settings.bootstrap_resamples,
        settings.seed ^ 0x5C0_12E,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficiencyPoint {
    pub g2: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub ratio_c_analytic: f64,
    pub ratio_c_empirical: f64,
    pub ratio_c_sigma: f64,
    pub scoring_ratio: f64,
    pub scoring_sigma: f64,
    pub replications: usize,
}

pub fn evaluate_point(g2: f64, c: f64, settings: &EfficiencySettings) -> Result<EfficiencyPoint> {
    let replicas = replicate(g2, c, settings)?;
    let (ratio, ratio_sigma) = empirical_ratio_c(&replicas, settings);
    let (score, score_sigma) = empirical_scoring_ratio(&replicas, settings);
    Ok(EfficiencyPoint {
        g2,
        c,
        ratio_c_analytic: variance_ratio_c(g2, c),
        ratio_c_empirical: ratio,
        ratio_c_sigma: ratio_sigma,
        scoring_ratio: score,
        scoring_sigma: score_sigma,
        replications: replicas.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub g2_range: (f64, f64),
    pub c_range: (f64, f64),
    /// Points per axis, at least 5.
    pub resolution: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            g2_range: (0.0, 1.0),
            c_range: (0.0, 1.0),
            resolution: 11,
        }
    }
}

impl GridSpec {
    pub fn points(&self) -> Vec<(f64, f64)> {
        let axis = |(lo, hi): (f64, f64), k: usize| {
            lo + (hi - lo) * k as f64 / (self.resolution - 1) as f64
        };
        (0..self.resolution)
            .flat_map(|i| (0..self.resolution).map(move |k| (i, k)))
            .map(|(i, k)| (axis(self.g2_range, i), axis(self.c_range, k)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Argmax {
    pub g2: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoringMap {
    pub tool_version: String,
    /// SHA-256 of the grid and settings.
    pub config_hash: String,
    pub grid: GridSpec,
    pub settings: EfficiencySettings,
    pub points: Vec<EfficiencyPoint>,
    pub argmax_analytic: Argmax,
    pub argmax_scoring: Argmax,
}

fn argmax(points: &[EfficiencyPoint], f: impl Fn(&EfficiencyPoint) -> f64) -> Argmax {
    points
        .iter()
        .filter(|p| f(p).is_finite())
        .max_by(|a, b| f(a).total_cmp(&f(b)))
        .map(|p| Argmax {
            g2: p.g2,
            c: p.c,
            value: f(p),
        })
        .unwrap_or(Argmax {
            g2: f64::NAN,
            c: f64::NAN,
            value: f64::NAN,
        })
}

/// Evaluates every grid point; grid points run one after another and the
/// replicas of each point in parallel.
pub fn scoring_map(grid: &GridSpec, settings: &EfficiencySettings) -> Result<ScoringMap> {
    if grid.resolution < 5 {
        return Err(invalid("scoring map needs at least 5 points per axis"));
    }
    let points = grid
        .points()
        .into_iter()
        .map(|(g, c)| evaluate_point(g, c, settings))
        .collect::<Result<Vec<_>>>()?;
    let hash = Sha256::digest(serde_json::to_vec(&(grid, settings))?);
    Ok(ScoringMap {
        tool_version: TOOL_VERSION.to_string(),
        config_hash: crate::simulate::hex(&hash),
        grid: *grid,
        settings: settings.clone(),
        argmax_analytic: argmax(&points, |p| p.ratio_c_analytic),
        argmax_scoring: argmax(&points, |p| p.scoring_ratio),
        points,
    })
}

impl ScoringMap {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# {TOOL_VERSION} config_hash={}", self.config_hash)?;
        writeln!(w, "g2,C,ratio_analytic,ratio_empirical,sigma,scoring_ratio,scoring_sigma")?;
        for p in &self.points {
            writeln!(
                w,
                "{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
                p.g2,
                p.c,
                p.ratio_c_analytic,
                p.ratio_c_empirical,
                p.ratio_c_sigma,
                p.scoring_ratio,
                p.scoring_sigma
            )?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(Error::from)
    }

    /// Fraction of grid cells whose scoring ratio is at least `threshold`
    /// (cells with an undefined ratio count as failing).
    pub fn fraction_scoring_at_least(&self, threshold: f64) -> f64 {
        let ok = self.points.iter().filter(|p| p.scoring_ratio >= threshold).count();
        ok as f64 / self.points.len() as f64
    }
}
