//! Small derivative-free minimizers.

use crate::error::{Error, Result};

/// Minimizes a unimodal `f` on `[lo, hi]` by golden-section search.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while (hi - lo).abs() > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    (lo + hi) / 2.0
}

#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    /// Initial simplex edge per coordinate.
    pub step: Vec<f64>,
    /// Stop when every vertex lies within this distance of the best one in
    /// each coordinate.
    pub x_tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Nelder-Mead simplex minimization inside the box `[lower, upper]`.
///
/// Each bounded coordinate is searched through `x = mid + half * sin(u)`,
/// which keeps every trial point feasible while leaving the edges reachable
/// and the simplex non-degenerate. `step` is given in `x` units; `x_tol` is
/// checked on the mapped vertices.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &NelderMeadOptions,
) -> Result<Minimum> {
    let n = start.len();
    let mid: Vec<f64> = (0..n).map(|i| 0.5 * (lower[i] + upper[i])).collect();
    let half: Vec<f64> = (0..n).map(|i| 0.5 * (upper[i] - lower[i])).collect();
    let bounded = |i: usize| half[i].is_finite() && half[i] > 0.0;
    let to_x = |u: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| if bounded(i) { mid[i] + half[i] * u[i].sin() } else { u[i] })
            .collect()
    };
    let to_u = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                if bounded(i) {
                    ((x[i] - mid[i]) / half[i]).clamp(-1.0, 1.0).asin()
                } else {
                    x[i]
                }
            })
            .collect()
    };
    let mut eval = |u: &[f64]| f(&to_x(u));

    let u0 = to_u(start);
    let mut simplex: Vec<Vec<f64>> = vec![u0.clone()];
    for i in 0..n {
        let mut u = u0.clone();
        let du = if bounded(i) {
            (opts.step[i] / half[i]).min(1.0)
        } else {
            opts.step[i]
        };
        // Step inward when starting on an edge.
        u[i] += if u0[i] > 0.0 { -du } else { du };
        simplex.push(u);
    }
    let mut values: Vec<f64> = simplex.iter().map(|u| eval(u)).collect();

    for iter in 0..opts.max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let best_x = to_x(&simplex[0]);
        let spread = simplex[1..]
            .iter()
            .flat_map(|u| {
                let x = to_x(u);
                x.into_iter().zip(&best_x).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>()
            })
            .fold(0.0f64, f64::max);
        if spread <= opts.x_tol {
            return Ok(Minimum {
                x: best_x,
                value: values[0],
                iterations: iter,
            });
        }

        let centroid: Vec<f64> = (0..n)
            .map(|i| simplex[..n].iter().map(|u| u[i]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            (0..n)
                .map(|i| centroid[i] + t * (simplex[n][i] - centroid[i]))
                .collect()
        };

        let ur = along(-1.0);
        let fr = eval(&ur);
        if fr < values[0] {
            let ue = along(-2.0);
            let fe = eval(&ue);
            if fe < fr {
                simplex[n] = ue;
                values[n] = fe;
            } else {
                simplex[n] = ur;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = ur;
            values[n] = fr;
            continue;
        }
        let uc = if fr < values[n] { along(-0.5) } else { along(0.5) };
        let fc = eval(&uc);
        if fc < values[n].min(fr) {
            simplex[n] = uc;
            values[n] = fc;
            continue;
        }
        // Shrink toward the best vertex.
        for k in 1..=n {
            let u: Vec<f64> = (0..n)
                .map(|i| simplex[0][i] + 0.5 * (simplex[k][i] - simplex[0][i]))
                .collect();
            values[k] = eval(&u);
            simplex[k] = u;
        }
    }
    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        last: to_x(&simplex[best]),
    })
}

/// Symmetric 2x2 inverse; `None` when singular.
pub fn invert_2x2(m: [[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if !det.is_finite() || det.abs() < 1e-300 {
        return None;
    }
    Some([
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ])
}
