//! Pairwise click correlations across pulse lags.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::simulate::{ClickRecord, ClickStream, DETECTORS};

/// Detector pairs in report order: the two same-port pairs, then the four
/// split-port pairs.
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (2, 3), (0, 2), (0, 3), (1, 2), (1, 3)];

/// Indices into [`PAIRS`] of the pairs that share a beamsplitter port.
pub const AUTO_PAIRS: [usize; 2] = [0, 1];
pub const CROSS_PAIRS: [usize; 4] = [2, 3, 4, 5];

pub fn pair_name(pair: usize) -> String {
    let (l, m) = PAIRS[pair];
    format!("{}{}", DETECTORS[l], DETECTORS[m])
}

/// A value with a one-standard-deviation uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
    /// Set when the value was forced into its physical range.
    pub clamped: bool,
}

impl Estimate {
    pub fn new(value: f64, sigma: f64) -> Self {
        Estimate {
            value,
            sigma,
            clamped: false,
        }
    }

    /// Clamps into `[lo, hi]`, flagging the estimate if it moved.
    pub fn clamp(self, lo: f64, hi: f64) -> Self {
        let v = self.value.clamp(lo, hi);
        Estimate {
            value: v,
            sigma: self.sigma,
            clamped: self.clamped || v != self.value,
        }
    }
}

/// Raw coincidence counts for every detector pair and lag.
///
/// For pair `(l, m)` and lag `j`, the count is the number of pulses `i` with
/// a click on `l` at `i` and on `m` at `i + j`. Negative lags are stored, so
/// both orderings are available.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSet {
    max_lag: usize,
    n_pulses: u64,
    singles: [u64; 4],
    counts: Vec<Vec<u64>>,
}

impl CorrelationSet {
    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    pub fn n_pulses(&self) -> u64 {
        self.n_pulses
    }

    pub fn singles(&self) -> [u64; 4] {
        self.singles
    }

    /// Click probability per pulse of each detector.
    pub fn single_probabilities(&self) -> [f64; 4] {
        self.singles.map(|s| s as f64 / self.n_pulses as f64)
    }

    pub fn lags(&self) -> impl Iterator<Item = i64> {
        let j = self.max_lag as i64;
        -j..=j
    }

    fn index(&self, j: i64) -> usize {
        assert!(
            j.unsigned_abs() as usize <= self.max_lag,
            "lag {j} outside +-{}",
            self.max_lag
        );
        (j + self.max_lag as i64) as usize
    }

    pub fn count(&self, pair: usize, j: i64) -> u64 {
        self.counts[pair][self.index(j)]
    }

    /// Expected count for uncorrelated clicks.
    fn accidental(&self, pair: usize, j: i64) -> f64 {
        let (l, m) = PAIRS[pair];
        let p = self.single_probabilities();
        (self.n_pulses - j.unsigned_abs()) as f64 * p[l] * p[m]
    }

    /// Normalized correlation with Poisson uncertainty. The count error has a
    /// floor of one count so empty bins keep a finite weight; the singles
    /// normalization adds its own relative error.
    pub fn g2(&self, pair: usize, j: i64) -> Estimate {
        let n = self.count(pair, j) as f64;
        let norm = self.accidental(pair, j);
        let value = n / norm;
        let (l, m) = PAIRS[pair];
        let rel_singles = 1.0 / self.singles[l] as f64 + 1.0 / self.singles[m] as f64;
        let sigma = ((n.max(1.0) / (norm * norm)) + value * value * rel_singles).sqrt();
        Estimate::new(value, sigma)
    }

    /// Mean over a set of pairs at lag `j`, with independent errors.
    pub fn mean_over(&self, pairs: &[usize], j: i64) -> Estimate {
        let k = pairs.len() as f64;
        let (sum, var) = pairs.iter().fold((0.0, 0.0), |(s, v), &p| {
            let e = self.g2(p, j);
            (s + e.value, v + e.sigma * e.sigma)
        });
        Estimate::new(sum / k, var.sqrt() / k)
    }

    /// Same-port average `(g_AB + g_CD) / 2`.
    pub fn auto(&self, j: i64) -> Estimate {
        self.mean_over(&AUTO_PAIRS, j)
    }

    /// Split-port average over the four cross pairs.
    pub fn cross(&self, j: i64) -> Estimate {
        self.mean_over(&CROSS_PAIRS, j)
    }

    /// Average over all six pairs.
    pub fn all_pairs(&self, j: i64) -> Estimate {
        self.mean_over(&[0, 1, 2, 3, 4, 5], j)
    }
}

/// Counts pairwise coincidences for every lag in `-max_lag..=max_lag`.
///
/// Fails with [`Error::ZeroSingles`] naming the first silent detector.
pub fn correlate(stream: &ClickStream, max_lag: usize) -> Result<CorrelationSet> {
    let singles = stream.singles();
    if let Some(k) = singles.iter().position(|&s| s == 0) {
        return Err(Error::ZeroSingles(DETECTORS[k]));
    }
    if max_lag as u64 >= stream.n_pulses() {
        return Err(crate::error::invalid(format!(
            "max lag {max_lag} needs more than {} pulses",
            stream.n_pulses()
        )));
    }
    let records = stream.records();
    let width = 2 * max_lag + 1;
    const CHUNK: usize = 1 << 16;
    let starts: Vec<usize> = (0..records.len()).step_by(CHUNK).collect();
    let counts = starts
        .par_iter()
        .map(|&start| {
            let end = (start + CHUNK).min(records.len());
            let mut local = vec![vec![0u64; width]; PAIRS.len()];
            count_range(records, start, end, max_lag, &mut local);
            local
        })
        .reduce(
            || vec![vec![0u64; width]; PAIRS.len()],
            |mut a, b| {
                for (ra, rb) in a.iter_mut().zip(b) {
                    for (x, y) in ra.iter_mut().zip(rb) {
                        *x += y;
                    }
                }
                a
            },
        );
    Ok(CorrelationSet {
        max_lag,
        n_pulses: stream.n_pulses(),
        singles,
        counts,
    })
}

/// Adds the coincidences whose earlier record lies in `records[start..end]`.
fn count_range(
    records: &[ClickRecord],
    start: usize,
    end: usize,
    max_lag: usize,
    counts: &mut [Vec<u64>],
) {
    let centre = max_lag;
    for a in start..end {
        let first = records[a];
        for (p, &(l, m)) in PAIRS.iter().enumerate() {
            if first.fired(l) && first.fired(m) {
                counts[p][centre] += 1;
            }
        }
        for later in &records[a + 1..] {
            let j = (later.pulse_index - first.pulse_index) as usize;
            if j > max_lag {
                break;
            }
            for (p, &(l, m)) in PAIRS.iter().enumerate() {
                if first.fired(l) && later.fired(m) {
                    counts[p][centre + j] += 1;
                }
                if first.fired(m) && later.fired(l) {
                    counts[p][centre - j] += 1;
                }
            }
        }
    }
}

/// Port-level view used by conventional two-detector measurements: a port
/// clicks when either of its detectors does.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PortCoincidence {
    pub n_pulses: u64,
    pub port_singles: [u64; 2],
    pub coincidences: u64,
}

impl PortCoincidence {
    /// Zero-lag coincidence between the two ports, normalized by singles.
    pub fn g2(&self) -> Estimate {
        let n = self.n_pulses as f64;
        let norm = n * (self.port_singles[0] as f64 / n) * (self.port_singles[1] as f64 / n);
        let c = self.coincidences as f64;
        let value = c / norm;
        let rel = 1.0 / self.port_singles[0] as f64 + 1.0 / self.port_singles[1] as f64;
        Estimate::new(value, (c.max(1.0) / (norm * norm) + value * value * rel).sqrt())
    }
}

/// Merges detectors A|B and C|D into two ports and counts same-pulse
/// coincidences between them.
pub fn port_coincidence(stream: &ClickStream) -> Result<PortCoincidence> {
    let mut port_singles = [0u64; 2];
    let mut coincidences = 0u64;
    for r in stream.records() {
        let p1 = r.detector_mask & 0b0011 != 0;
        let p2 = r.detector_mask & 0b1100 != 0;
        port_singles[0] += p1 as u64;
        port_singles[1] += p2 as u64;
        coincidences += (p1 && p2) as u64;
    }
    if port_singles[0] == 0 {
        return Err(Error::ZeroSingles(DETECTORS[0]));
    }
    if port_singles[1] == 0 {
        return Err(Error::ZeroSingles(DETECTORS[2]));
    }
    Ok(PortCoincidence {
        n_pulses: stream.n_pulses(),
        port_singles,
        coincidences,
    })
}
