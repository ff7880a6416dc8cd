//! Linear-optics engine for the four-detector network.
//!
//! Mode order of the unitary: column 0 is the open port of BS3, column 1 the
//! long (delayed) interferometer arm, column 2 the short arm and column 3 the
//! open port of BS4. Rows are detectors A, B, C, D. Reflections carry a
//! factor `i`, transmissions are real.
//!
//! Output probabilities for partially distinguishable photons follow the
//! permanent expansion over the Gram matrix `S` of internal states:
//!
//! ```text
//! P(r) = 1 / (prod r_l! * perm(G_in)) * sum_pi prod_j S[pi(j)][j] * perm(M o conj(M_pi))
//! ```
//!
//! where `M[k][j] = U[out_k][in_j]`, `M_pi` permutes the columns of `M` by
//! `pi`, and `G_in[j][k] = S[j][k]` when photons `j` and `k` enter the same
//! mode (zero otherwise) normalizes the input state.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{sample_index, OccupationPattern};

pub const N_MODES: usize = 4;
pub const BS3_OPEN_PORT: usize = 0;
pub const LONG_ARM: usize = 1;
pub const SHORT_ARM: usize = 2;
pub const BS4_OPEN_PORT: usize = 3;

const UNITARITY_TOL: f64 = 1e-12;

/// Amplitude reflection and transmission of a lossless beamsplitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamsplitterParams {
    pub r: f64,
    pub t: f64,
}

impl BeamsplitterParams {
    pub fn new(r: f64, t: f64) -> Result<Self> {
        let bs = BeamsplitterParams { r, t };
        bs.validate()?;
        Ok(bs)
    }

    pub fn balanced() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        BeamsplitterParams { r: h, t: h }
    }

    pub fn validate(&self) -> Result<()> {
        let in_range = |x: f64| (0.0..=1.0).contains(&x);
        if !in_range(self.r) || !in_range(self.t) {
            return Err(invalid(format!(
                "beamsplitter r = {}, t = {} outside [0, 1]",
                self.r, self.t
            )));
        }
        let norm = self.r * self.r + self.t * self.t;
        if (norm - 1.0).abs() > UNITARITY_TOL {
            return Err(invalid(format!(
                "beamsplitter r^2 + t^2 = {norm}, not lossless"
            )));
        }
        Ok(())
    }
}

/// Square complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    n: usize,
    data: Vec<Complex64>,
}

impl Unitary {
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension(format!("matrix with {n} rows is not square")));
        }
        Ok(Unitary {
            n,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.n + col]
    }

    pub fn rows(&self) -> Vec<Vec<Complex64>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    /// Largest entry of `|U^dagger U - I|`.
    pub fn unitarity_error(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    s += self.get(k, a).conj() * self.get(k, b);
                }
                if a == b {
                    s -= 1.0;
                }
                worst = worst.max(s.norm());
            }
        }
        worst
    }

    /// `|U[row][col]|^2` for every row: where a lone photon entering `col`
    /// ends up.
    pub fn column_probabilities(&self, col: usize) -> Vec<f64> {
        (0..self.n).map(|row| self.get(row, col).norm_sqr()).collect()
    }
}

/// Interferometer of the Sg2 layout: BS2 closes the unbalanced
/// interferometer, BS3 and BS4 split each output onto two detectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitModel {
    pub bs2: BeamsplitterParams,
    pub bs3: BeamsplitterParams,
    pub bs4: BeamsplitterParams,
    /// Interferometer delay in pulse periods.
    pub delay_pulses: u64,
    #[serde(skip)]
    unitary: Option<Unitary>,
}

impl CircuitModel {
    pub fn new(
        bs2: BeamsplitterParams,
        bs3: BeamsplitterParams,
        bs4: BeamsplitterParams,
        delay_pulses: u64,
    ) -> Result<Self> {
        if delay_pulses == 0 {
            return Err(invalid("interferometer delay must be at least one pulse"));
        }
        let unitary = build_unitary(&bs2, &bs3, &bs4)?;
        Ok(CircuitModel {
            bs2,
            bs3,
            bs4,
            delay_pulses,
            unitary: Some(unitary),
        })
    }

    pub fn balanced(delay_pulses: u64) -> Self {
        let b = BeamsplitterParams::balanced();
        CircuitModel::new(b, b, b, delay_pulses).expect("balanced circuit is valid")
    }

    /// Rebuilds the cached unitary after deserialization.
    pub fn validate(&mut self) -> Result<()> {
        if self.delay_pulses == 0 {
            return Err(invalid("interferometer delay must be at least one pulse"));
        }
        self.unitary = Some(build_unitary(&self.bs2, &self.bs3, &self.bs4)?);
        Ok(())
    }

    pub fn unitary(&self) -> Unitary {
        match &self.unitary {
            Some(u) => u.clone(),
            None => build_unitary(&self.bs2, &self.bs3, &self.bs4)
                .expect("circuit parameters were validated"),
        }
    }

    pub fn output_pattern_probability(
        &self,
        inputs: &[(usize, InternalState)],
        pattern: &OccupationPattern,
    ) -> Result<f64> {
        pattern_probability(&self.unitary(), inputs, pattern)
    }

    /// Probability that `inputs` produce clicks on three distinct detectors.
    pub fn three_fold_probability(&self, inputs: &[(usize, InternalState)]) -> Result<f64> {
        let u = self.unitary();
        let mut total = 0.0;
        for pattern in OccupationPattern::enumerate(N_MODES, inputs.len()) {
            if pattern.counts().iter().filter(|&&c| c > 0).count() >= 3 {
                total += pattern_probability(&u, inputs, &pattern)?;
            }
        }
        Ok(total)
    }
}

/// Builds the 4x4 network unitary from the three beamsplitters.
pub fn build_unitary(
    bs2: &BeamsplitterParams,
    bs3: &BeamsplitterParams,
    bs4: &BeamsplitterParams,
) -> Result<Unitary> {
    bs2.validate()?;
    bs3.validate()?;
    bs4.validate()?;
    let (r2, t2) = (bs2.r, bs2.t);
    let (r3, t3) = (bs3.r, bs3.t);
    let (r4, t4) = (bs4.r, bs4.t);
    let re = |x: f64| Complex64::new(x, 0.0);
    let im = |x: f64| Complex64::new(0.0, x);
    let rows = vec![
        vec![im(r3), im(r2 * t3), re(t2 * t3), re(0.0)],
        vec![re(t3), re(-r2 * r3), im(r3 * t2), re(0.0)],
        vec![re(0.0), im(r4 * t2), re(-r2 * r4), re(t4)],
        vec![re(0.0), re(t2 * t4), im(r2 * t4), im(r4)],
    ];
    Unitary::from_rows(&rows)
}

/// Matrix permanent by Ryser's formula, visiting subsets in Gray-code order.
pub fn permanent(rows: &[Vec<Complex64>]) -> Result<Complex64> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension(format!(
            "permanent needs a square matrix, got {n} rows of lengths {:?}",
            rows.iter().map(Vec::len).collect::<Vec<_>>()
        )));
    }
    let flat: Vec<Complex64> = rows.iter().flatten().copied().collect();
    Ok(permanent_flat(n, &flat))
}

pub(crate) fn permanent_flat(n: usize, a: &[Complex64]) -> Complex64 {
    match n {
        0 => return Complex64::new(1.0, 0.0),
        1 => return a[0],
        2 => return a[0] * a[3] + a[1] * a[2],
        _ => {}
    }
    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut total = Complex64::new(0.0, 0.0);
    let mut subset: u64 = 0;
    for k in 1u64..(1u64 << n) {
        let col = k.trailing_zeros() as usize;
        let bit = 1u64 << col;
        let adding = subset & bit == 0;
        subset ^= bit;
        for (i, s) in row_sums.iter_mut().enumerate() {
            if adding {
                *s += a[i * n + col];
            } else {
                *s -= a[i * n + col];
            }
        }
        let prod: Complex64 = row_sums.iter().product();
        if subset.count_ones() % 2 == 0 {
            total += prod;
        } else {
            total -= prod;
        }
    }
    if n % 2 == 1 {
        -total
    } else {
        total
    }
}

/// Internal (non-spatial) degrees of freedom of one photon.
///
/// Two photons overlap through a shared coherent component of amplitude
/// `coherence` each, a Gaussian spectral factor in the detuning (measured in
/// units of the overlap width) and the relative linear polarization angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InternalState {
    pub id: u64,
    pub coherence: f64,
    pub frequency: f64,
    pub polarization: f64,
}

impl InternalState {
    /// A photon whose intrinsic overlap-squared with any other photon of the
    /// same source is `indistinguishability`.
    pub fn new(id: u64, indistinguishability: f64, frequency: f64, polarization: f64) -> Self {
        InternalState {
            id,
            coherence: indistinguishability.clamp(0.0, 1.0).sqrt().sqrt(),
            frequency,
            polarization,
        }
    }

    /// A fully indistinguishable photon (up to its id).
    pub fn pure(id: u64) -> Self {
        InternalState::new(id, 1.0, 0.0, 0.0)
    }

    pub fn overlap(&self, other: &InternalState) -> Complex64 {
        if self.id == other.id {
            return Complex64::new(1.0, 0.0);
        }
        let df = self.frequency - other.frequency;
        let value = self.coherence
            * other.coherence
            * (-df * df / 4.0).exp()
            * (self.polarization - other.polarization).cos();
        Complex64::new(value, 0.0)
    }

    /// Squared overlap: the HOM coalescence probability contributed by this
    /// pair.
    pub fn overlap_sqr(&self, other: &InternalState) -> f64 {
        self.overlap(other).norm_sqr()
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn gram(inputs: &[(usize, InternalState)]) -> Vec<Complex64> {
    let n = inputs.len();
    let mut s = vec![Complex64::new(0.0, 0.0); n * n];
    for (j, (_, a)) in inputs.iter().enumerate() {
        for (k, (_, b)) in inputs.iter().enumerate() {
            s[j * n + k] = a.overlap(b);
        }
    }
    s
}

/// Probability of detecting `pattern` at the outputs of `u`, for photons
/// entering the listed input modes with the given internal states.
pub fn pattern_probability(
    u: &Unitary,
    inputs: &[(usize, InternalState)],
    pattern: &OccupationPattern,
) -> Result<f64> {
    let n = inputs.len();
    if pattern.total_photons() != n {
        return Err(Error::Dimension(format!(
            "pattern holds {} photons, input has {n}",
            pattern.total_photons()
        )));
    }
    if pattern.n_modes() != u.dim() {
        return Err(Error::Dimension(format!(
            "pattern over {} modes, unitary is {}x{}",
            pattern.n_modes(),
            u.dim(),
            u.dim()
        )));
    }
    if let Some((m, _)) = inputs.iter().find(|(m, _)| *m >= u.dim()) {
        return Err(Error::Dimension(format!("input mode {m} out of range")));
    }
    Ok(pattern_probability_unchecked(u, inputs, pattern))
}

fn pattern_probability_unchecked(
    u: &Unitary,
    inputs: &[(usize, InternalState)],
    pattern: &OccupationPattern,
) -> f64 {
    let n = inputs.len();
    if n == 0 {
        return 1.0;
    }
    let outs = pattern.modes();
    let s = gram(inputs);
    let m: Vec<Complex64> = outs
        .iter()
        .flat_map(|&o| inputs.iter().map(move |(i, _)| u.get(o, *i)))
        .collect();

    let input_norm: Vec<Complex64> = (0..n * n)
        .map(|idx| {
            let (j, k) = (idx / n, idx % n);
            if inputs[j].0 == inputs[k].0 {
                s[idx]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let norm = permanent_flat(n, &input_norm).re;

    let mut h = vec![Complex64::new(0.0, 0.0); n * n];
    let mut total = Complex64::new(0.0, 0.0);
    for pi in permutations(n) {
        let weight: Complex64 = (0..n).map(|j| s[pi[j] * n + j]).product();
        if weight.norm_sqr() == 0.0 {
            continue;
        }
        for k in 0..n {
            for j in 0..n {
                h[k * n + j] = m[k * n + j] * m[k * n + pi[j]].conj();
            }
        }
        total += weight * permanent_flat(n, &h);
    }
    (total.re / (pattern.factorial_product() * norm)).max(0.0)
}

/// Draws an output pattern for the given photons.
pub fn sample_output<R: Rng + ?Sized>(
    u: &Unitary,
    inputs: &[(usize, InternalState)],
    rng: &mut R,
) -> OccupationPattern {
    let n_modes = u.dim();
    let single_mode = inputs.windows(2).all(|w| w[0].0 == w[1].0);
    if single_mode {
        // Photons sharing one input mode route independently whatever their
        // internal states.
        let mut counts = vec![0u8; n_modes];
        if let Some((col, _)) = inputs.first() {
            let probs = u.column_probabilities(*col);
            for _ in inputs {
                counts[sample_index(&probs, rng)] += 1;
            }
        }
        return OccupationPattern::new(counts);
    }
    let patterns = OccupationPattern::enumerate(n_modes, inputs.len());
    let probs: Vec<f64> = patterns
        .iter()
        .map(|p| pattern_probability_unchecked(u, inputs, p))
        .collect();
    let total: f64 = probs.iter().sum();
    let u01: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (p, w) in patterns.iter().zip(&probs) {
        acc += w;
        if u01 < acc {
            return p.clone();
        }
    }
    patterns[probs.iter().rposition(|&w| w > 0.0).unwrap_or(0)].clone()
}

/// Probability that two single photons, one per input of a beamsplitter,
/// leave through different ports, given their squared overlap.
pub fn hom_coincidence(overlap_sqr: f64, r: f64, t: f64) -> f64 {
    let (r2, t2) = (r * r, t * t);
    (r2 - t2).powi(2) + 2.0 * r2 * t2 * (1.0 - overlap_sqr)
}
