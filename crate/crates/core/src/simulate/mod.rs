//! Monte Carlo experiment engine.
//!
//! Each pulse draws a photon number from the brightness-modulated source.
//! In the interferometric modes every photon takes the long (delayed by `d`
//! pulses) or short arm of the fiber splitter with equal probability, so
//! time slot `i` at BS2 collects short-arm photons of pulse `i` and long-arm
//! photons of pulse `i - d`. The photons of a slot are routed jointly through
//! the network unitary, then detected.
//!
//! Work is split into fixed blocks of [`BLOCK_PULSES`] pulses. Emission runs
//! per block, each block starting its brightness and spectral processes from
//! their stationary laws; routing then runs per block of arrival slots. Both
//! stages draw from block-keyed generators (see [`crate::rng`]), so results
//! are identical at any thread count.

mod jitter;
mod stream;

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use jitter::{JitterProcess, Telegraph};
pub use stream::{
    hex, letters_to_mask, mask_to_letters, ClickRecord, ClickStream, DETECTORS, FORMAT_VERSION,
    HEADER_LEN, RECORD_LEN,
    MAGIC,
};

use crate::circuit::{sample_output, CircuitModel, InternalState, LONG_ARM, SHORT_ARM};
use crate::error::{invalid, Result};
use crate::fock::{sample_index, SourceModel};
use crate::rng::{block_rng, Purpose, BLOCK_PULSES};

/// Measurement configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Unbalanced interferometer feeding both emulated number-resolving
    /// detectors.
    Sg2,
    /// Interferometer bypassed; the source feeds BS2 directly.
    Hbt,
    /// Interferometer with the half-wave plate at 0 (co-polarized arms).
    HomHwpCo,
    /// Interferometer with the long arm rotated by pi/2 (cross-polarized).
    HomHwpCross,
}

impl Mode {
    pub fn uses_interferometer(self) -> bool {
        !matches!(self, Mode::Hbt)
    }

    /// Polarization rotation applied to long-arm photons.
    pub fn hwp_angle(self) -> f64 {
        match self {
            Mode::HomHwpCross => FRAC_PI_2,
            _ => 0.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Sg2 => "sg2",
            Mode::Hbt => "hbt",
            Mode::HomHwpCo => "hom-hwp-co",
            Mode::HomHwpCross => "hom-hwp-cross",
        }
    }

    pub fn parse(s: &str) -> Result<Mode> {
        match s {
            "sg2" => Ok(Mode::Sg2),
            "hbt" => Ok(Mode::Hbt),
            "hom-hwp-co" => Ok(Mode::HomHwpCo),
            "hom-hwp-cross" => Ok(Mode::HomHwpCross),
            other => Err(invalid(format!(
                "unknown mode {other:?} (expected sg2, hbt, hom-hwp-co or hom-hwp-cross)"
            ))),
        }
    }

    pub const ALL: [Mode; 4] = [Mode::Sg2, Mode::Hbt, Mode::HomHwpCo, Mode::HomHwpCross];
}

/// How the two BS2 output ports are read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Detection {
    /// BS3/BS4 each feed two non-resolving detectors (A, B and C, D).
    #[default]
    Emulated,
    /// Ideal two-photon number-resolving detector on each BS2 port. Bits A
    /// and C report at least one photon on the BS3 and BS4 side, B and D
    /// report at least two.
    NumberResolving,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: SourceModel,
    pub circuit: CircuitModel,
    pub mode: Mode,
    #[serde(default)]
    pub detection: Detection,
    /// Per-photon survival probability from source to detector click.
    pub efficiency: f64,
    /// Dark-click probability per detector per pulse.
    pub dark_prob: f64,
    pub n_pulses: u64,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        let mut c = self.circuit.clone();
        c.validate()?;
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(invalid(format!(
                "path efficiency {} outside (0, 1]",
                self.efficiency
            )));
        }
        if !(0.0..1.0).contains(&self.dark_prob) {
            return Err(invalid(format!(
                "dark probability {} outside [0, 1)",
                self.dark_prob
            )));
        }
        if self.n_pulses == 0 {
            return Err(invalid("n_pulses must be at least 1"));
        }
        if self.circuit.delay_pulses >= BLOCK_PULSES {
            return Err(invalid(format!(
                "delay of {} pulses exceeds the simulation block",
                self.circuit.delay_pulses
            )));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form; identifies the stream's origin.
    pub fn hash(&self) -> [u8; 32] {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).into()
    }

    pub fn hash_hex(&self) -> String {
        hex(&self.hash())
    }
}

/// Squared overlap governing interference between two photons; zero for
/// orthogonal polarizations.
pub fn effective_overlap(a: &InternalState, b: &InternalState) -> f64 {
    a.overlap_sqr(b)
}

#[derive(Debug, Clone, Copy)]
struct Photon {
    slot: u64,
    arm: usize,
    state: InternalState,
}

/// Photon bookkeeping at the source, before any detection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EmissionTally {
    /// Pulses by emitted photon number `1..=3` (index 0 unused).
    pub pulses_by_number: [u64; 4],
    pub photons_emitted: u64,
    /// Photons that survived the path efficiency.
    pub photons_transmitted: u64,
}

impl EmissionTally {
    fn add(mut self, other: EmissionTally) -> Self {
        for k in 0..4 {
            self.pulses_by_number[k] += other.pulses_by_number[k];
        }
        self.photons_emitted += other.photons_emitted;
        self.photons_transmitted += other.photons_transmitted;
        self
    }
}

/// Runs the experiment on the current rayon pool.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ClickStream> {
    Ok(run_experiment_with_tally(config)?.0)
}

/// Like [`run_experiment`], also returning the emission tally.
pub fn run_experiment_with_tally(config: &ExperimentConfig) -> Result<(ClickStream, EmissionTally)> {
    config.validate()?;
    let n_blocks = config.n_pulses.div_ceil(BLOCK_PULSES);

    let (emitted, tallies): (Vec<Vec<Photon>>, Vec<EmissionTally>) = (0..n_blocks)
        .into_par_iter()
        .map(|b| emit_block(config, b))
        .unzip();
    let tally = tallies.into_iter().fold(EmissionTally::default(), EmissionTally::add);

    let records: Vec<Vec<ClickRecord>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let prev = if b > 0 { Some(&emitted[b as usize - 1][..]) } else { None };
            route_block(config, b, prev, &emitted[b as usize])
        })
        .collect();

    let stream = ClickStream::new(records.concat(), config.n_pulses, config.hash())?;
    Ok((stream, tally))
}

fn block_range(config: &ExperimentConfig, block: u64) -> (u64, u64) {
    let start = block * BLOCK_PULSES;
    (start, (start + BLOCK_PULSES).min(config.n_pulses))
}

fn emit_block(config: &ExperimentConfig, block: u64) -> (Vec<Photon>, EmissionTally) {
    let (start, end) = block_range(config, block);
    let source = &config.source;
    let mut rng = block_rng(config.seed, block, Purpose::Emission);
    let telegraph = Telegraph::new(source);
    let mut spectral = JitterProcess::stationary(source, start, &mut rng);

    let dist = source.modulated(source.bright_level());
    let q = 1.0 - dist[0];
    let mut photons = Vec::new();
    let mut tally = EmissionTally::default();
    if q <= 0.0 {
        return (photons, tally);
    }
    let conditional: Vec<f64> = dist[1..].iter().map(|p| p / q).collect();
    let gap = Geometric::new(q.min(1.0)).expect("emission probability in (0, 1]");
    let interferometer = config.mode.uses_interferometer();
    let delay = config.circuit.delay_pulses;
    let hwp = config.mode.hwp_angle();

    let mut pulse = start;
    let mut on = telegraph.initial_state(&mut rng);
    while pulse < end {
        let run_end = match telegraph.run_length(on, &mut rng) {
            Some(len) => pulse.saturating_add(len).min(end),
            None => end,
        };
        if on {
            let mut t = pulse.saturating_add(gap.sample(&mut rng));
            while t < run_end {
                let n = 1 + sample_index(&conditional, &mut rng);
                tally.pulses_by_number[n.min(3)] += 1;
                tally.photons_emitted += n as u64;
                let freq = spectral.advance_to(t, &mut rng);
                for k in 0..n as u64 {
                    if config.efficiency < 1.0 && rng.random::<f64>() >= config.efficiency {
                        continue;
                    }
                    tally.photons_transmitted += 1;
                    let long = interferometer && rng.random::<bool>();
                    let (arm, slot, pol) = if long {
                        (LONG_ARM, t + delay, hwp)
                    } else {
                        (SHORT_ARM, t, 0.0)
                    };
                    photons.push(Photon {
                        slot,
                        arm,
                        state: InternalState::new(
                            t * 4 + k,
                            source.indistinguishability,
                            freq,
                            pol,
                        ),
                    });
                }
                t = t.saturating_add(1 + gap.sample(&mut rng));
            }
        }
        pulse = run_end;
        on = !on;
    }
    (photons, tally)
}

fn route_block(
    config: &ExperimentConfig,
    block: u64,
    previous: Option<&[Photon]>,
    current: &[Photon],
) -> Vec<ClickRecord> {
    let (start, end) = block_range(config, block);
    let mut arriving: Vec<Photon> = previous
        .into_iter()
        .flatten()
        .chain(current)
        .filter(|p| p.slot >= start && p.slot < end)
        .copied()
        .collect();
    arriving.sort_by_key(|p| (p.slot, p.state.id));

    let u = config.circuit.unitary();
    let mut rng = block_rng(config.seed, block, Purpose::Routing);
    let mut events: Vec<(u64, [u8; 4])> = Vec::new();
    let mut inputs = Vec::with_capacity(4);
    for group in arriving.chunk_by(|a, b| a.slot == b.slot) {
        inputs.clear();
        inputs.extend(group.iter().map(|p| (p.arm, p.state)));
        let pattern = sample_output(&u, &inputs, &mut rng);
        let mut counts = [0u8; 4];
        counts.copy_from_slice(pattern.counts());
        events.push((group[0].slot, counts));
    }

    if config.dark_prob > 0.0 {
        let mut dark_rng = block_rng(config.seed, block, Purpose::Dark);
        let gap = Geometric::new(config.dark_prob).expect("dark probability in (0, 1)");
        for det in 0..4 {
            let mut t = start.saturating_add(gap.sample(&mut dark_rng));
            while t < end {
                let mut counts = [0u8; 4];
                counts[det] = 1;
                events.push((t, counts));
                t = t.saturating_add(1 + gap.sample(&mut dark_rng));
            }
        }
        events.sort_by_key(|e| e.0);
    }

    let mut records = Vec::with_capacity(events.len());
    for group in events.chunk_by(|a, b| a.0 == b.0) {
        let mut counts = [0u8; 4];
        for (_, c) in group {
            for k in 0..4 {
                counts[k] = counts[k].saturating_add(c[k]);
            }
        }
        let mask = detector_mask(config.detection, &counts);
        if mask != 0 {
            records.push(ClickRecord {
                pulse_index: group[0].0,
                detector_mask: mask,
            });
        }
    }
    records
}

fn detector_mask(detection: Detection, counts: &[u8; 4]) -> u8 {
    match detection {
        Detection::Emulated => counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .fold(0u8, |m, (k, _)| m | 1 << k),
        Detection::NumberResolving => {
            let port = |n: u8| match n {
                0 => 0b00,
                1 => 0b01,
                _ => 0b11,
            };
            port(counts[0] + counts[1]) | port(counts[2] + counts[3]) << 2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockDistribution;

    pub(crate) fn config(p: Vec<f64>, c: f64, zeta0: f64, mode: Mode, n: u64) -> ExperimentConfig {
        ExperimentConfig {
            source: SourceModel::new(FockDistribution::new(p).unwrap(), c, zeta0, 3.64, 6.575)
                .unwrap(),
            circuit: CircuitModel::balanced(4),
            mode,
            detection: Detection::Emulated,
            efficiency: 1.0,
            dark_prob: 0.0,
            n_pulses: n,
            seed: 1,
        }
    }

    #[test]
    fn vacuum_gives_empty_stream() {
        let cfg = config(vec![1.0, 0.0, 0.0, 0.0], 1.0, 1.0, Mode::Sg2, 10_000);
        let s = run_experiment(&cfg).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.n_pulses(), 10_000);
    }

    #[test]
    fn perfect_single_photons_spread_evenly() {
        let n = 1_000_000;
        let cfg = config(vec![0.0, 1.0, 0.0, 0.0], 1.0, 1.0, Mode::Sg2, n);
        let s = run_experiment(&cfg).unwrap();
        for (k, &c) in s.singles().iter().enumerate() {
            // A slot holds one photon with probability 1/2 (detector hit 1/4)
            // and a coalesced pair with probability 1/4 (one port, then a
            // detector hit 3/4): 1/8 + 3/32 = 7/32.
            let rate = c as f64 / n as f64;
            assert!((rate - 7.0 / 32.0).abs() < 0.003, "detector {k}: {rate}");
        }
    }

    #[test]
    fn perfect_coalescence_has_no_cross_port_coincidences() {
        let cfg = config(vec![0.9, 0.1, 0.0, 0.0], 1.0, 1.0, Mode::Sg2, 2_000_000);
        let s = run_experiment(&cfg).unwrap();
        let cross = s
            .records()
            .iter()
            .filter(|r| r.detector_mask & 0b0011 != 0 && r.detector_mask & 0b1100 != 0)
            .count();
        assert_eq!(cross, 0);
        // ... while same-port pairs do occur.
        assert!(s.records().iter().any(|r| r.detector_mask == 0b0011));
    }

    #[test]
    fn clicks_never_exceed_photons() {
        let mut cfg = config(vec![0.0, 0.0, 1.0, 0.0], 0.5, 1.0, Mode::Sg2, 50_000);
        cfg.efficiency = 1.0;
        let s = run_experiment(&cfg).unwrap();
        // At most two photons per pulse, and each slot gets photons from two
        // pulses: never more than four clicks, and the mean click count per
        // slot cannot exceed the mean photon number.
        let clicks: u64 = s.records().iter().map(|r| r.clicks() as u64).sum();
        assert!(clicks <= 2 * 50_000);
        let cfg1 = config(vec![0.0, 1.0, 0.0, 0.0], 0.5, 1.0, Mode::Hbt, 50_000);
        let s1 = run_experiment(&cfg1).unwrap();
        assert!(s1.records().iter().all(|r| r.clicks() == 1));
    }

    #[test]
    fn hbt_and_sg2_singles_agree() {
        let p = vec![0.95, 0.05, 0.0, 0.0];
        let n = 2_000_000;
        let a = run_experiment(&config(p.clone(), 0.6, 1.34, Mode::Sg2, n)).unwrap();
        let b = run_experiment(&config(p, 0.6, 1.34, Mode::Hbt, n)).unwrap();
        for k in 0..4 {
            let (x, y) = (a.singles()[k] as f64, b.singles()[k] as f64);
            // Telegraph bunching inflates the count variance roughly by
            // zeta-weighted correlations; allow five plain-Poisson sigmas.
            assert!((x - y).abs() < 5.0 * (x + y).sqrt() * 2.0, "det {k}: {x} vs {y}");
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let mut cfg = config(vec![0.9, 0.09, 0.01, 0.0], 0.6, 1.34, Mode::Sg2, 3 * BLOCK_PULSES / 2);
        cfg.dark_prob = 1e-4;
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| run_experiment(&cfg)).unwrap();
        let b = four.install(|| run_experiment(&cfg)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dark_counts_follow_bernoulli_rate() {
        let mut cfg = config(vec![1.0, 0.0, 0.0, 0.0], 1.0, 1.0, Mode::Sg2, 1_000_000);
        cfg.dark_prob = 1e-3;
        let s = run_experiment(&cfg).unwrap();
        for c in s.singles() {
            assert!((c as f64 - 1000.0).abs() < 5.0 * 1000f64.sqrt(), "{c}");
        }
    }

    #[test]
    fn number_resolving_mask_encoding() {
        assert_eq!(detector_mask(Detection::NumberResolving, &[1, 0, 0, 0]), 0b0001);
        assert_eq!(detector_mask(Detection::NumberResolving, &[1, 1, 0, 0]), 0b0011);
        assert_eq!(detector_mask(Detection::NumberResolving, &[0, 0, 0, 2]), 0b1100);
        assert_eq!(detector_mask(Detection::NumberResolving, &[0, 1, 1, 0]), 0b0101);
        assert_eq!(detector_mask(Detection::Emulated, &[0, 2, 1, 0]), 0b0110);
    }

    #[test]
    fn config_validation() {
        let mut cfg = config(vec![0.9, 0.1, 0.0, 0.0], 0.6, 1.0, Mode::Sg2, 10);
        assert!(cfg.validate().is_ok());
        cfg.efficiency = 0.0;
        assert!(cfg.validate().is_err());
        cfg.efficiency = 1.0;
        cfg.n_pulses = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn cross_polarization_removes_overlap() {
        let a = InternalState::new(0, 0.9, 0.0, 0.0);
        let b = InternalState::new(1, 0.9, 0.0, Mode::HomHwpCross.hwp_angle());
        assert!(effective_overlap(&a, &b) < 1e-30);
        let c = InternalState::new(2, 0.61, 0.0, 0.0);
        assert!((effective_overlap(&b.clone(), &b) - 1.0).abs() < 1e-15);
        assert!((effective_overlap(&a, &c) - (0.9f64 * 0.61).sqrt()).abs() < 1e-12);
    }
}
