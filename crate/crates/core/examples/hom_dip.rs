//! Two-photon interference at the recombining beamsplitter: exact
//! coincidence probabilities from the circuit model against the simulated
//! cross-port correlation, for several photon overlaps.
//!
//! `cargo run --release --example hom_dip`

use sg2::circuit::{hom_coincidence, CircuitModel, InternalState, LONG_ARM, N_MODES, SHORT_ARM};
use sg2::config::RunConfig;
use sg2::estimator::correlate;
use sg2::fock::OccupationPattern;
use sg2::simulate::run_experiment;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/reference.toml"))?;
    let circuit = CircuitModel::balanced(4);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    println!("   M   (1-M)/2   circuit    simulated cross g2(0)");
    for m in [0.0, 0.25, 0.5, 0.61, 0.9, 1.0] {
        // Photons meeting at BS2 from the two arms; sum over detector pairs
        // on opposite BS2 outputs (A or B with C or D).
        let inputs = [
            (LONG_ARM, InternalState::new(0, m, 0.0, 0.0)),
            (SHORT_ARM, InternalState::new(1, m, 0.0, 0.0)),
        ];
        let mut split = 0.0;
        for pattern in OccupationPattern::enumerate(N_MODES, 2) {
            let c = pattern.counts();
            if (c[0] + c[1]) == 1 && (c[2] + c[3]) == 1 {
                split += circuit.output_pattern_probability(&inputs, &pattern)?;
            }
        }
        let text = base
            .replace("g2_target = 0.05", "p2 = 0.0")
            .replace("C = 0.61", &format!("C = {m}"))
            .replace("zeta0 = 1.34", "zeta0 = 1.0");
        let cfg = RunConfig::from_toml_str(&text)?;
        let x = correlate(&run_experiment(&cfg.experiment()?)?, cfg.run.max_lag)?.cross(0);
        println!(
            "{m:5.2}   {:.4}    {:.4}     {:.4} +- {:.4}",
            hom_coincidence(m, s, s),
            split,
            x.value,
            x.sigma
        );
    }
    Ok(())
}
