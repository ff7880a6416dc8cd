//! Slow emitter dynamics shared by brightness and emission frequency.
//!
//! Brightness is a two-state Markov (telegraph) process: a dark state with
//! no emission and a bright state with multiplier `zeta0`, occupied with
//! probability `1 / zeta0`. Its autocorrelation is exactly
//! `<b_i b_{i+k}> = zeta(k)` with per-pulse decay `exp(-1 / tau1)`.
//!
//! The spectral offset is a stationary Gaussian AR(1) sequence with the same
//! correlation time; its stationary spread is expressed in units of the
//! spectral overlap width.

use rand::Rng;
use rand_distr::{Distribution, Geometric, StandardNormal};

use crate::fock::SourceModel;

/// Brightness telegraph process, simulated as alternating run lengths.
#[derive(Debug, Clone)]
pub struct Telegraph {
    bright_fraction: f64,
    leave_bright: Option<Geometric>,
    leave_dark: Option<Geometric>,
}

impl Telegraph {
    pub fn new(source: &SourceModel) -> Self {
        if source.zeta0 <= 1.0 {
            return Telegraph {
                bright_fraction: 1.0,
                leave_bright: None,
                leave_dark: None,
            };
        }
        let bright_fraction = 1.0 / source.zeta0;
        let switch = 1.0 - source.lag_one_correlation();
        let geo = |p: f64| Geometric::new(p.clamp(f64::MIN_POSITIVE, 1.0)).ok();
        Telegraph {
            bright_fraction,
            leave_bright: geo((1.0 - bright_fraction) * switch),
            leave_dark: geo(bright_fraction * switch),
        }
    }

    pub fn bright_fraction(&self) -> f64 {
        self.bright_fraction
    }

    /// Draws the state of the first pulse from the stationary distribution.
    pub fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        self.bright_fraction >= 1.0 || rng.random::<f64>() < self.bright_fraction
    }

    /// Number of consecutive pulses spent in `bright` before switching;
    /// `None` means the process never switches.
    pub fn run_length<R: Rng + ?Sized>(&self, bright: bool, rng: &mut R) -> Option<u64> {
        let leave = if bright {
            self.leave_bright.as_ref()
        } else {
            self.leave_dark.as_ref()
        }?;
        Some(1u64.saturating_add(leave.sample(rng)))
    }
}

/// Spectral offset process.
#[derive(Debug, Clone)]
pub struct JitterProcess {
    /// Current offset, in units of the overlap width.
    pub state: f64,
    /// Correlation time in pulses.
    pub tau1: f64,
    /// Stationary standard deviation of the offset.
    pub spread: f64,
    at_pulse: u64,
}

impl JitterProcess {
    /// Starts at `pulse` with a draw from the stationary distribution.
    pub fn stationary<R: Rng + ?Sized>(source: &SourceModel, pulse: u64, rng: &mut R) -> Self {
        let spread = source.spectral_diffusion;
        let state = if spread > 0.0 {
            spread * rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        };
        JitterProcess {
            state,
            tau1: source.tau1,
            spread,
            at_pulse: pulse,
        }
    }

    /// Advances exactly to `pulse` (which must not precede the current one)
    /// and returns the offset there.
    pub fn advance_to<R: Rng + ?Sized>(&mut self, pulse: u64, rng: &mut R) -> f64 {
        debug_assert!(pulse >= self.at_pulse);
        if self.spread > 0.0 && pulse > self.at_pulse {
            let steps = (pulse - self.at_pulse) as f64;
            let rho = (-steps / self.tau1).exp();
            let z: f64 = rng.sample(StandardNormal);
            self.state = rho * self.state + self.spread * (1.0 - rho * rho).sqrt() * z;
        }
        self.at_pulse = pulse;
        self.state
    }
}
