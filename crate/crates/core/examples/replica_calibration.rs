//! Repeats a simulation over independent seeds and compares the spread of
//! the estimates with the uncertainties the analysis reports.
//!
//! `cargo run --release --example replica_calibration [config.toml] [replicas]`

use sg2::config::RunConfig;
use sg2::estimator::{analyze, AnalysisOptions};
use sg2::rng::replica_seed;
use sg2::simulate::run_experiment;

fn summary(name: &str, xs: &[f64], reported: &[f64]) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let rep = reported.iter().sum::<f64>() / n;
    println!("{name:<8} mean {mean:.4}  sd {sd:.4}  mean reported sigma {rep:.4}");
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/reference.toml").into());
    let replicas: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(40);
    let cfg = RunConfig::load(&path)?;
    let base = cfg.experiment()?;

    let (mut g, mut gs, mut c, mut cs, mut z, mut zs, mut t, mut ts) =
        (vec![], vec![], vec![], vec![], vec![], vec![], vec![], vec![]);
    let (mut fg, mut fc) = (vec![], vec![]);
    for r in 0..replicas {
        let mut exp = base.clone();
        exp.seed = replica_seed(base.seed, r);
        let stream = run_experiment(&exp)?;
        let rep = analyze(&stream, &AnalysisOptions::from_config(&exp, cfg.run.max_lag))?.report;
        g.push(rep.g2_hbt0.value);
        gs.push(rep.g2_hbt0.sigma);
        if let Some(e) = rep.coherence {
            c.push(e.value);
            cs.push(e.sigma);
        }
        z.push(rep.zeta.zeta0.value);
        zs.push(rep.zeta.zeta0.sigma);
        t.push(rep.zeta.tau1.value);
        ts.push(rep.zeta.tau1.sigma.min(1e3));
        if let Some(f) = rep.boson_fit {
            fg.push(f.g2_hbt0.value);
            fc.push(f.coherence.value);
        }
    }
    println!("{replicas} replicas of {} pulses", base.n_pulses);
    summary("g2", &g, &gs);
    if !c.is_empty() {
        summary("C", &c, &cs);
    }
    summary("zeta0", &z, &zs);
    summary("tau1", &t, &ts);
    if !fg.is_empty() {
        summary("fit g2", &fg, &gs);
        summary("fit C", &fc, &cs);
    }
    Ok(())
}
