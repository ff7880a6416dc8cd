//! Simulates the canonical source through the Sg2 layout and recovers
//! `g2_hbt(0)`, `C` and the bunching envelope from the click stream.
//!
//! `cargo run --release --example round_trip [config.toml]`

use std::time::Instant;

use sg2::config::RunConfig;
use sg2::estimator::{analyze, AnalysisOptions};
use sg2::simulate::run_experiment;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/reference.toml").into());
    let cfg = RunConfig::load(&path)?;
    let exp = cfg.experiment()?;

    let t = Instant::now();
    let stream = run_experiment(&exp)?;
    let sim_time = t.elapsed();
    let analysis = analyze(&stream, &AnalysisOptions::from_config(&exp, cfg.run.max_lag))?;
    let r = &analysis.report;

    println!("pulses            {}", exp.n_pulses);
    println!("click records     {}", stream.records().len());
    println!("simulate + analyze {:.2?} + {:.2?}", sim_time, t.elapsed() - sim_time);
    println!("g2_hbt(0)         {:.4} +- {:.4}", r.g2_hbt0.value, r.g2_hbt0.sigma);
    if let (Some(c), Some(v)) = (r.coherence, r.visibility) {
        println!("C                 {:.4} +- {:.4}", c.value, c.sigma);
        println!("V                 {:.4} +- {:.4}", v.value, v.sigma);
    }
    println!(
        "zeta0, tau1       {:.4} +- {:.4}, {:.3} +- {:.3}",
        r.zeta.zeta0.value, r.zeta.zeta0.sigma, r.zeta.tau1.value, r.zeta.tau1.sigma
    );
    if let Some(f) = &r.boson_fit {
        println!(
            "six-pair fit      g2 {:.4} +- {:.4}, C {:.4} +- {:.4}, chi2 {:.2}",
            f.g2_hbt0.value, f.g2_hbt0.sigma, f.coherence.value, f.coherence.sigma, f.chi2
        );
    }
    for w in &r.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
