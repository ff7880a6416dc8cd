//! TOML run configuration.
//!
//! ```toml
//! [source]
//! p1 = 0.029
//! g2_target = 0.05        # or p2 = ...
//! C = 0.61
//! zeta0 = 1.34
//! tau1 = 3.64
//! pulse_period_ns = 6.575
//!
//! [circuit]
//! r2 = 0.7071067811865476
//! t2 = 0.7071067811865476
//! r3 = 0.7071067811865476
//! t3 = 0.7071067811865476
//! r4 = 0.7071067811865476
//! t4 = 0.7071067811865476
//! delay_pulses = 4
//!
//! [detection]
//! eta = 1.0
//! dark_prob = 0.0
//!
//! [run]
//! n_pulses = 10000000
//! seed = 7
//! mode = "sg2"
//! max_lag = 20
//! ```
//!
//! Unknown keys are rejected. Optional extras: `spectral_diffusion` under
//! `[source]` and `readout = "number-resolving"` under `[detection]`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circuit::{BeamsplitterParams, CircuitModel};
use crate::error::{invalid, Error, Result};
use crate::fock::{FockDistribution, SourceModel};
use crate::simulate::{Detection, ExperimentConfig, Mode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    pub p1: f64,
    #[serde(default, alias = "g2")]
    pub g2_target: Option<f64>,
    #[serde(default)]
    pub p2: Option<f64>,
    #[serde(rename = "C")]
    pub c: f64,
    pub zeta0: f64,
    pub tau1: f64,
    pub pulse_period_ns: f64,
    #[serde(default)]
    pub spectral_diffusion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSection {
    pub r2: f64,
    pub t2: f64,
    pub r3: f64,
    pub t3: f64,
    pub r4: f64,
    pub t4: f64,
    pub delay_pulses: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionSection {
    pub eta: f64,
    pub dark_prob: f64,
    #[serde(default)]
    pub readout: Detection,
}

fn default_max_lag() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub n_pulses: u64,
    pub seed: u64,
    pub mode: Mode,
    #[serde(default = "default_max_lag")]
    pub max_lag: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub source: SourceSection,
    pub circuit: CircuitSection,
    pub detection: DetectionSection,
    pub run: RunSection,
}

impl RunConfig {
    /// Parses and fully validates a configuration.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.experiment()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Photon-number distribution implied by the source section.
    pub fn fock(&self) -> Result<FockDistribution> {
        let s = &self.source;
        match (s.g2_target, s.p2) {
            (Some(g2), None) => FockDistribution::from_brightness(s.p1, g2),
            (None, Some(p2)) => {
                FockDistribution::new(vec![1.0 - s.p1 - p2, s.p1, p2, 0.0])
            }
            (Some(_), Some(_)) => Err(invalid("give either g2_target or p2, not both")),
            (None, None) => Err(invalid("[source] needs g2_target or p2")),
        }
    }

    pub fn circuit(&self) -> Result<CircuitModel> {
        let c = &self.circuit;
        CircuitModel::new(
            BeamsplitterParams::new(c.r2, c.t2)?,
            BeamsplitterParams::new(c.r3, c.t3)?,
            BeamsplitterParams::new(c.r4, c.t4)?,
            c.delay_pulses,
        )
    }

    /// Builds and validates the simulation configuration.
    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let s = &self.source;
        let source = SourceModel::new(self.fock()?, s.c, s.zeta0, s.tau1, s.pulse_period_ns)?
            .with_spectral_diffusion(s.spectral_diffusion)?;
        let cfg = ExperimentConfig {
            source,
            circuit: self.circuit()?,
            mode: self.run.mode,
            detection: self.detection.readout,
            efficiency: self.detection.eta,
            dark_prob: self.detection.dark_prob,
            n_pulses: self.run.n_pulses,
            seed: self.run.seed,
        };
        cfg.validate()?;
        if self.run.max_lag as u64 >= self.run.n_pulses.max(1) {
            return Err(invalid("max_lag must be smaller than n_pulses"));
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[source]
p1 = 0.029
g2_target = 0.05
C = 0.61
zeta0 = 1.34
tau1 = 3.64
pulse_period_ns = 6.575

[circuit]
r2 = 0.7071067811865476
t2 = 0.7071067811865476
r3 = 0.7071067811865476
t3 = 0.7071067811865476
r4 = 0.7071067811865476
t4 = 0.7071067811865476
delay_pulses = 4

[detection]
eta = 1.0
dark_prob = 0.0

[run]
n_pulses = 1000
seed = 7
mode = "sg2"
max_lag = 20
"#;

    #[test]
    fn parses_and_builds() {
        let cfg = RunConfig::from_toml_str(BASE).unwrap();
        let exp = cfg.experiment().unwrap();
        assert_eq!(exp.mode, Mode::Sg2);
        assert!((exp.source.fock.p(2) - 0.05 * 0.029 * 0.029 / 2.0).abs() < 1e-15);
        assert_eq!(exp.circuit.delay_pulses, 4);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = BASE.replace("seed = 7", "seed = 7\ncolour = 3");
        assert!(matches!(RunConfig::from_toml_str(&text), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_non_unitary_beamsplitter() {
        let text = BASE.replace("r3 = 0.7071067811865476", "r3 = 0.9");
        assert!(matches!(RunConfig::from_toml_str(&text), Err(Error::Invalid(_))));
    }

    #[test]
    fn requires_exactly_one_two_photon_spec() {
        let both = BASE.replace("g2_target = 0.05", "g2_target = 0.05\np2 = 1e-5");
        assert!(RunConfig::from_toml_str(&both).is_err());
        let neither = BASE.replace("g2_target = 0.05\n", "");
        assert!(RunConfig::from_toml_str(&neither).is_err());
        let p2 = BASE.replace("g2_target = 0.05", "p2 = 2e-5");
        let f = RunConfig::from_toml_str(&p2).unwrap().fock().unwrap();
        assert_eq!(f.p(2), 2e-5);
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = RunConfig::from_toml_str(BASE).unwrap();
        let again = RunConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn unknown_mode_is_an_error() {
        let text = BASE.replace("mode = \"sg2\"", "mode = \"mzi\"");
        assert!(RunConfig::from_toml_str(&text).is_err());
    }
}
