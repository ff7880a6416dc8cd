//! Six-pair fit on an unbalanced interferometer, where the two-value
//! (auto/cross) inversion no longer applies. The simulation uses a 45:55
//! recombining beamsplitter and uneven detector splitters; the fit models
//! every detector pair through the circuit unitary.
//!
//! `cargo run --release --example boson_fit [pulses]`

use sg2::circuit::CircuitModel;
use sg2::config::RunConfig;
use sg2::estimator::{analyze, AnalysisOptions};
use sg2::fitter::{fit_poisson, predict_matrix, Bunching, CorrelationMatrix};
use sg2::fock::zeta;
use sg2::simulate::run_experiment;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = RunConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/reference.toml"))?;
    if let Some(n) = std::env::args().nth(1) {
        cfg.run.n_pulses = n.parse()?;
    }
    let split = |r: f64| (r.sqrt(), (1.0 - r).sqrt());
    (cfg.circuit.r2, cfg.circuit.t2) = split(0.45);
    (cfg.circuit.r3, cfg.circuit.t3) = split(0.55);
    (cfg.circuit.r4, cfg.circuit.t4) = split(0.40);
    let exp = cfg.experiment()?;
    let circuit: CircuitModel = exp.circuit.clone();

    let stream = run_experiment(&exp)?;
    let analysis = analyze(&stream, &AnalysisOptions::from_config(&exp, cfg.run.max_lag))?;
    let matrix = CorrelationMatrix::from_correlations(&analysis.correlations);
    let z = &analysis.report.zeta;
    let bunching = Bunching {
        zeta0: z.zeta0.value,
        zeta_delay: z.zeta(4),
    };
    let f = fit_poisson(&matrix, &circuit, bunching)?;
    let truth = predict_matrix(0.05, 0.61, &circuit, Bunching { zeta0: 1.34, zeta_delay: zeta(4, 1.34, 3.64) })?;

    println!("pair   measured            model at truth");
    for (p, name) in ["AB", "CD", "AC", "AD", "BC", "BD"].iter().enumerate() {
        println!("{name}     {:.4} +- {:.4}     {:.4}", matrix.values[p], matrix.sigmas[p], truth[p]);
    }
    println!("fit: g2 = {:.4} +- {:.4}, C = {:.4} +- {:.4}, chi2 = {:.2} / {}", f.g2_hbt0.value, f.g2_hbt0.sigma, f.coherence.value, f.coherence.sigma, f.chi2, f.dof);
    let two_value = &analysis.report;
    println!(
        "two-value inversion (assumes a balanced circuit): g2 = {:.4}, C = {:.4}",
        two_value.g2_hbt0.value,
        two_value.coherence.map_or(f64::NAN, |c| c.value)
    );
    Ok(())
}
