//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use sg2::circuit::{InternalState, Unitary};
use sg2::config::RunConfig;
use sg2::fock::OccupationPattern;

pub const REFERENCE_TOML: &str = include_str!("../../../../configs/reference.toml");

pub fn reference_config() -> RunConfig {
    RunConfig::from_toml_str(REFERENCE_TOML).expect("shipped config is valid")
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Haar-ish random unitary from Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> Unitary {
    let mut cols: Vec<Vec<Complex64>> = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect()
        })
        .collect();
    for k in 0..n {
        for j in 0..k {
            let proj: Complex64 = (0..n).map(|i| cols[j][i].conj() * cols[k][i]).sum();
            for i in 0..n {
                let v = cols[j][i];
                cols[k][i] -= proj * v;
            }
        }
        let norm = cols[k].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut cols[k] {
            *z /= norm;
        }
    }
    let rows: Vec<Vec<Complex64>> = (0..n).map(|r| (0..n).map(|c| cols[c][r]).collect()).collect();
    Unitary::from_rows(&rows).unwrap()
}

/// Permanent as the plain sum over all n! permutations.
pub fn permanent_by_permutations(a: &[Vec<Complex64>]) -> Complex64 {
    fn rec(a: &[Vec<Complex64>], row: usize, used: &mut Vec<bool>, acc: Complex64, total: &mut Complex64) {
        if row == a.len() {
            *total += acc;
            return;
        }
        for c in 0..a.len() {
            if !used[c] {
                used[c] = true;
                rec(a, row + 1, used, acc * a[row][c], total);
                used[c] = false;
            }
        }
    }
    let mut total = zero();
    rec(a, 0, &mut vec![false; a.len()], Complex64::new(1.0, 0.0), &mut total);
    total
}

/// Vectors `v_j` with `<v_j, v_k>` equal to the photons' overlaps, from a
/// Cholesky factorization of their Gram matrix.
fn internal_vectors(states: &[InternalState]) -> Vec<Vec<Complex64>> {
    let n = states.len();
    let s: Vec<Vec<Complex64>> = (0..n)
        .map(|j| (0..n).map(|k| states[j].overlap(&states[k])).collect())
        .collect();
    let mut l = vec![vec![zero(); n]; n];
    for j in 0..n {
        for a in 0..=j {
            let sum: Complex64 = (0..a).map(|b| l[j][b] * l[a][b].conj()).sum();
            if a == j {
                let d = (s[j][j] - sum).re;
                l[j][j] = Complex64::new(if d > 1e-14 { d.sqrt() } else { 0.0 }, 0.0);
            } else if l[a][a].re > 0.0 {
                l[j][a] = (s[j][a] - sum) / l[a][a].re;
            }
        }
    }
    l.iter().map(|row| row.iter().map(|z| z.conj()).collect()).collect()
}

/// Output-pattern probability by expanding the product of creation
/// operators over every (output mode, internal mode) assignment.
pub fn brute_force_pattern_probability(
    u: &Unitary,
    inputs: &[(usize, InternalState)],
    pattern: &OccupationPattern,
) -> f64 {
    let n = inputs.len();
    let m = u.dim();
    let states: Vec<InternalState> = inputs.iter().map(|(_, s)| *s).collect();
    let v = internal_vectors(&states);
    let dims = m * n;
    // Coefficient of each sorted multiset of joint modes.
    let mut amps: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
    let total = dims.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let mut modes = Vec::with_capacity(n);
        let mut amp = Complex64::new(1.0, 0.0);
        for (j, (input, _)) in inputs.iter().enumerate() {
            let joint = c % dims;
            c /= dims;
            let (o, a) = (joint / n, joint % n);
            amp *= u.get(o, *input) * v[j][a];
            modes.push(joint);
        }
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        modes.sort_unstable();
        *amps.entry(modes).or_insert_with(zero) += amp;
    }
    let mut by_pattern: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
    let mut norm = 0.0;
    for (modes, amp) in amps {
        let mut occ = vec![0u32; dims];
        for &x in &modes {
            occ[x] += 1;
        }
        let fact: f64 = occ.iter().map(|&k| (1..=k).product::<u32>() as f64).product();
        let p = amp.norm_sqr() * fact;
        norm += p;
        let mut counts = vec![0u8; m];
        for &x in &modes {
            counts[x / n] += 1;
        }
        *by_pattern.entry(counts).or_default() += p;
    }
    by_pattern.get(pattern.counts()).copied().unwrap_or(0.0) / norm
}
