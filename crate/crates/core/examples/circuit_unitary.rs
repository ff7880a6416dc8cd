//! The four-mode network unitary for a chosen set of beamsplitters and the
//! resulting two- and three-photon output statistics.
//!
//! `cargo run --release --example circuit_unitary [R2] [R3] [R4]`
//! (reflectivities, default 0.5 each)

use sg2::circuit::{BeamsplitterParams, CircuitModel, InternalState, LONG_ARM, N_MODES, SHORT_ARM};
use sg2::fock::OccupationPattern;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r: Vec<f64> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let bs = |k: usize| {
        let refl = r.get(k).copied().unwrap_or(0.5);
        BeamsplitterParams::new(refl.sqrt(), (1.0 - refl).sqrt())
    };
    let mut circuit = CircuitModel::new(bs(0)?, bs(1)?, bs(2)?, 4)?;
    circuit.validate()?;
    let u = circuit.unitary();
    println!("rows: detectors A-D; columns: BS3 open port, long arm, short arm, BS4 open port");
    for row in u.rows() {
        let cells: Vec<String> = row.iter().map(|z| format!("{:+.3}{:+.3}i", z.re, z.im)).collect();
        println!("  {}", cells.join("  "));
    }
    println!("unitarity error {:.1e}", u.unitarity_error());

    for (label, c) in [("identical", 1.0), ("distinguishable", 0.0)] {
        let inputs = [
            (LONG_ARM, InternalState::new(0, c, 0.0, 0.0)),
            (SHORT_ARM, InternalState::new(1, c, 0.0, 0.0)),
        ];
        println!("two {label} photons, one per arm:");
        for pattern in OccupationPattern::enumerate(N_MODES, 2) {
            let p = circuit.output_pattern_probability(&inputs, &pattern)?;
            if p > 1e-12 {
                println!("  {:?}  {p:.4}", pattern.counts());
            }
        }
    }
    let three = [
        (SHORT_ARM, InternalState::pure(0)),
        (SHORT_ARM, InternalState::pure(0)),
        (SHORT_ARM, InternalState::pure(0)),
    ];
    println!("three identical photons in the short arm give a three-fold click with probability {:.4}", circuit.three_fold_probability(&three)?);
    Ok(())
}
