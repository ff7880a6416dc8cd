//! Photon-number distribution from a detected rate, `g2_hbt(0)` and the
//! absence of three-fold coincidences, for a long low-efficiency run.
//!
//! `cargo run --release --example fock_reconstruction [alpha]`

use sg2::circuit::CircuitModel;
use sg2::estimator::{reconstruct_fock, three_fold_efficiency, FockInputs};
use sg2::simulate::Mode;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alpha: f64 = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(0.05);
    let (pulse_rate, eta) = (152.09e6, 0.0065);
    let detected_rate = 0.029 * pulse_rate * eta;
    let eps3 = three_fold_efficiency(&CircuitModel::balanced(4), Mode::Sg2, eta)?;
    let fock = reconstruct_fock(&FockInputs {
        singles_rate_hz: detected_rate,
        pulse_rate_hz: pulse_rate,
        efficiency: eta,
        g2_hbt0: 0.05,
        triples: 0,
        n_trials: 1.82e13 as u64,
        three_fold_efficiency: eps3,
        alpha,
    })?;
    println!("detected rate         {:.3e} Hz at {:.2} MHz, eta = {eta}", detected_rate, pulse_rate / 1e6);
    println!("three-fold efficiency {eps3:.3e}");
    for (n, p) in fock.probabilities().iter().enumerate() {
        let bound = if n == 3 && fock.p3_is_upper_bound() {
            format!("  (upper bound, {:.0}% confidence)", 100.0 * (1.0 - alpha))
        } else {
            String::new()
        };
        println!("p{n} = {p:.4e}{bound}");
    }
    Ok(())
}
