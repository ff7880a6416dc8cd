//! Compares the replicated variance ratios with the closed form at a few
//! points of the (g2, C) plane.
//!
//! `cargo run --release --example efficiency_points [replications] [pulses]`

use std::time::Instant;

use sg2::efficiency::{evaluate_point, EfficiencySettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let mut settings = EfficiencySettings::default();
    if let Some(r) = args.next() {
        settings.replications = r.parse()?;
    }
    if let Some(n) = args.next() {
        settings.n_pulses = n.parse()?;
    }
    println!(
        "{} replications x {} pulses, p1 = {}",
        settings.replications, settings.n_pulses, settings.p1
    );
    println!("   g2     C   analytic  empirical          scoring ratio");
    for (g, c) in [(0.05, 0.61), (0.5, 0.5), (1.0, 0.0)] {
        let t = Instant::now();
        let p = evaluate_point(g, c, &settings)?;
        println!(
            "{:5.2} {:5.2}   {:7.3}   {:6.3} +- {:5.3}   {:6.3} +- {:5.3}   ({:.1?})",
            g,
            c,
            p.ratio_c_analytic,
            p.ratio_c_empirical,
            p.ratio_c_sigma,
            p.scoring_ratio,
            p.scoring_sigma,
            t.elapsed()
        );
    }
    Ok(())
}
