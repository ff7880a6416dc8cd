//! Photon-number distributions, occupation patterns and the source model.
//!
//! The source emits a diagonal mixture of Fock states truncated at three
//! photons. Slow emitter dynamics are described by the bunching function
//! `zeta(k) = 1 + (zeta0 - 1) exp(-|k| / tau1)`, which the simulator realizes
//! as a correlated modulation of brightness from pulse to pulse.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Highest photon number the source model carries.
pub const MAX_PHOTONS: usize = 3;

const NORM_TOL: f64 = 1e-12;

/// Diagonal photon-number distribution `p[n]`, `n = 0..=N_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockDistribution {
    p: Vec<f64>,
    /// The last entry is a one-sided upper bound rather than an estimate.
    p3_is_upper_bound: bool,
}

impl FockDistribution {
    /// Validates that every entry lies in `[0, 1]` and that the entries sum
    /// to one.
    pub fn new(p: Vec<f64>) -> Result<Self> {
        check_entries(&p)?;
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(invalid(format!(
                "photon-number distribution sums to {total}, expected 1"
            )));
        }
        Ok(FockDistribution {
            p,
            p3_is_upper_bound: false,
        })
    }

    /// A distribution whose last entry is an upper bound. The remaining
    /// entries must sum to one on their own.
    pub fn with_upper_bound(p: Vec<f64>) -> Result<Self> {
        check_entries(&p)?;
        let Some((_, known)) = p.split_last() else {
            return Err(invalid("empty photon-number distribution"));
        };
        let total: f64 = known.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!(
                "bounded distribution: known entries sum to {total}, expected 1"
            )));
        }
        Ok(FockDistribution {
            p,
            p3_is_upper_bound: true,
        })
    }

    /// Builds `[p0, p1, p2, 0]` from brightness and purity using
    /// `g2 = 2 p2 / p1^2`.
    pub fn from_brightness(p1: f64, g2: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p1) || g2 < 0.0 || !g2.is_finite() {
            return Err(invalid(format!("p1 = {p1}, g2 = {g2} out of range")));
        }
        let p2 = g2 * p1 * p1 / 2.0;
        let p0 = 1.0 - p1 - p2;
        if p0 < 0.0 {
            return Err(invalid(format!("p1 = {p1}, g2 = {g2} leaves p0 < 0")));
        }
        Self::new(vec![p0, p1, p2, 0.0])
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn p(&self, n: usize) -> f64 {
        self.p.get(n).copied().unwrap_or(0.0)
    }

    pub fn p3_is_upper_bound(&self) -> bool {
        self.p3_is_upper_bound
    }

    pub fn max_photons(&self) -> usize {
        self.p.len().saturating_sub(1)
    }

    pub fn mean_photon_number(&self) -> f64 {
        let limit = if self.p3_is_upper_bound {
            self.p.len() - 1
        } else {
            self.p.len()
        };
        self.p[..limit]
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// Intrinsic `g2 = 2 p2 / p1^2`; `None` when `p1 = 0`.
    pub fn g2(&self) -> Option<f64> {
        let p1 = self.p(1);
        (p1 > 0.0).then(|| 2.0 * self.p(2) / (p1 * p1))
    }

    /// `p0 >= p1 >= p2 >= ...`, the ordering expected of a dim single-photon
    /// source.
    pub fn is_monotone(&self) -> bool {
        self.p.windows(2).all(|w| w[0] >= w[1])
    }
}

fn check_entries(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(invalid("empty photon-number distribution"));
    }
    if let Some((n, v)) = p
        .iter()
        .enumerate()
        .find(|(_, v)| !(0.0..=1.0).contains(*v) || !v.is_finite())
    {
        return Err(invalid(format!("p[{n}] = {v} outside [0, 1]")));
    }
    Ok(())
}

/// Draws a photon number with probability `p[n]` by inverting the CDF.
pub fn sample_photon_number<R: Rng + ?Sized>(dist: &FockDistribution, rng: &mut R) -> usize {
    sample_index(dist.probabilities(), rng)
}

/// Inverse-CDF draw from unnormalized-safe weights that sum to one.
pub(crate) fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // Rounding left a sliver above the last cumulative value; take the last
    // non-zero entry.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Bunching correction between photons generated `k` pulses apart.
pub fn zeta(k: i64, zeta0: f64, tau1: f64) -> f64 {
    1.0 + (zeta0 - 1.0) * (-(k.unsigned_abs() as f64) / tau1).exp()
}

/// Photon counts per optical mode.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupationPattern {
    counts: Vec<u8>,
}

impl OccupationPattern {
    pub fn new(counts: Vec<u8>) -> Self {
        OccupationPattern { counts }
    }

    /// Pattern from a list of mode indices, one per photon.
    pub fn from_modes(n_modes: usize, modes: &[usize]) -> Result<Self> {
        let mut counts = vec![0u8; n_modes];
        for &m in modes {
            let slot = counts
                .get_mut(m)
                .ok_or_else(|| invalid(format!("mode {m} >= {n_modes}")))?;
            *slot += 1;
        }
        Ok(OccupationPattern { counts })
    }

    pub fn counts(&self) -> &[u8] {
        &self.counts
    }

    pub fn n_modes(&self) -> usize {
        self.counts.len()
    }

    pub fn total_photons(&self) -> usize {
        self.counts.iter().map(|&c| c as usize).sum()
    }

    /// Mode index of every photon, in ascending order.
    pub fn modes(&self) -> Vec<usize> {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(m, &c)| std::iter::repeat_n(m, c as usize))
            .collect()
    }

    /// `prod_m counts[m]!`
    pub fn factorial_product(&self) -> f64 {
        self.counts
            .iter()
            .map(|&c| (1..=c as u64).product::<u64>() as f64)
            .product()
    }

    /// Every pattern of `n_photons` over `n_modes`, in lexicographic order.
    pub fn enumerate(n_modes: usize, n_photons: usize) -> Vec<OccupationPattern> {
        let mut out = Vec::new();
        let mut current = vec![0u8; n_modes];
        fill(&mut out, &mut current, 0, n_photons);
        out
    }
}

fn fill(out: &mut Vec<OccupationPattern>, current: &mut [u8], mode: usize, left: usize) {
    if mode + 1 == current.len() {
        current[mode] = left as u8;
        out.push(OccupationPattern::new(current.to_vec()));
        return;
    }
    for c in (0..=left).rev() {
        current[mode] = c as u8;
        fill(out, current, mode + 1, left - c);
    }
    current[mode] = 0;
}

/// Parameterized single-photon source.
///
/// `fock` is the distribution while the emitter is in its mean state; the
/// brightness modulation scales `p[n]` by `b^n` so that the long-time average
/// of `p1` is unchanged and same-pulse multiphoton terms pick up `zeta0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    pub fock: FockDistribution,
    /// Intrinsic two-photon overlap `C_true` between photons emitted in
    /// different pulses with no spectral offset.
    pub indistinguishability: f64,
    pub zeta0: f64,
    /// Correlation time of the brightness and spectral processes, in pulses.
    pub tau1: f64,
    pub pulse_period_ns: f64,
    /// Stationary spread of the spectral offset relative to the overlap
    /// width. Zero disables spectral diffusion.
    #[serde(default)]
    pub spectral_diffusion: f64,
}

impl SourceModel {
    pub fn new(
        fock: FockDistribution,
        indistinguishability: f64,
        zeta0: f64,
        tau1: f64,
        pulse_period_ns: f64,
    ) -> Result<Self> {
        let s = SourceModel {
            fock,
            indistinguishability,
            zeta0,
            tau1,
            pulse_period_ns,
            spectral_diffusion: 0.0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_spectral_diffusion(mut self, ratio: f64) -> Result<Self> {
        self.spectral_diffusion = ratio;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.indistinguishability) {
            return Err(invalid(format!(
                "indistinguishability {} outside [0, 1]",
                self.indistinguishability
            )));
        }
        if !(self.zeta0 >= 1.0) || !self.zeta0.is_finite() {
            return Err(invalid(format!(
                "zeta0 = {} must be >= 1 (zeta models excess bunching)",
                self.zeta0
            )));
        }
        if !(self.tau1 > 0.0) || !self.tau1.is_finite() {
            return Err(invalid(format!("tau1 = {} must be > 0", self.tau1)));
        }
        if !(self.pulse_period_ns > 0.0) {
            return Err(invalid(format!(
                "pulse period {} ns must be > 0",
                self.pulse_period_ns
            )));
        }
        if !(self.spectral_diffusion >= 0.0) || !self.spectral_diffusion.is_finite() {
            return Err(invalid(format!(
                "spectral diffusion ratio {} must be >= 0",
                self.spectral_diffusion
            )));
        }
        if self.fock.p3_is_upper_bound() {
            return Err(invalid("source distribution cannot carry an upper bound"));
        }
        if self.fock.max_photons() > MAX_PHOTONS {
            return Err(invalid(format!(
                "source truncated at n = {MAX_PHOTONS}, got n = {}",
                self.fock.max_photons()
            )));
        }
        let peak = self.emission_probability(self.bright_level());
        if peak > 1.0 + NORM_TOL {
            return Err(invalid(format!(
                "brightness modulation with zeta0 = {} pushes the emission probability to {peak}",
                self.zeta0
            )));
        }
        Ok(())
    }

    pub fn zeta(&self, k: i64) -> f64 {
        zeta(k, self.zeta0, self.tau1)
    }

    pub fn pulse_rate_hz(&self) -> f64 {
        1e9 / self.pulse_period_ns
    }

    /// Brightness multiplier of the emitting state; the dark state has zero.
    pub fn bright_level(&self) -> f64 {
        self.zeta0
    }

    /// Per-pulse AR(1) coefficient `exp(-1 / tau1)`.
    pub fn lag_one_correlation(&self) -> f64 {
        (-1.0 / self.tau1).exp()
    }

    /// Probability of at least one photon when the brightness is `b`.
    pub fn emission_probability(&self, b: f64) -> f64 {
        self.fock
            .probabilities()
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, p)| p * b.powi(n as i32))
            .sum()
    }

    /// Photon-number distribution at brightness `b`.
    pub fn modulated(&self, b: f64) -> Vec<f64> {
        let mut p: Vec<f64> = self
            .fock
            .probabilities()
            .iter()
            .enumerate()
            .map(|(n, p)| p * b.powi(n as i32))
            .collect();
        p[0] = (1.0 - p[1..].iter().sum::<f64>()).max(0.0);
        p
    }

    /// Ensemble mean of the spectral overlap factor for photons `k` pulses
    /// apart.
    pub fn mean_spectral_overlap(&self, k: u64) -> f64 {
        let s2 = self.spectral_diffusion * self.spectral_diffusion;
        let rho = self.lag_one_correlation().powf(k as f64);
        1.0 / (1.0 + 2.0 * s2 * (1.0 - rho)).sqrt()
    }

    /// Indistinguishability seen by an interferometer with delay `d`.
    pub fn effective_indistinguishability(&self, d: u64) -> f64 {
        self.indistinguishability * self.mean_spectral_overlap(d)
    }

    /// Returns a copy whose intrinsic overlap is chosen so that an
    /// interferometer with delay `d` measures `measured`.
    pub fn calibrated_to_measured(&self, measured: f64, d: u64) -> Result<Self> {
        let intrinsic = measured / self.mean_spectral_overlap(d);
        if !(0.0..=1.0).contains(&intrinsic) {
            return Err(invalid(format!(
                "measured indistinguishability {measured} needs intrinsic overlap {intrinsic} > 1"
            )));
        }
        let mut out = self.clone();
        out.indistinguishability = intrinsic;
        Ok(out)
    }
}
