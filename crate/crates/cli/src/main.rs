use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sg2::app::{self, Overrides};
use sg2::efficiency::GridSpec;
use sg2::simulate::Mode;
use sg2::{Error, Result};

/// Simulate and analyze Sg2 single-photon source characterization runs.
#[derive(Parser)]
#[command(name = "sg2", version)]
struct Cli {
    /// Worker threads; results do not depend on this. Defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    #[arg(long)]
    pulses: Option<u64>,
}

impl RunArgs {
    fn load(&self) -> Result<sg2::config::RunConfig> {
        app::load_config(
            &self.config,
            &Overrides {
                seed: self.seed,
                mode: self.mode,
                pulses: self.pulses,
            },
        )
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a click stream (binary, or CSV for a .csv path) plus a JSON summary.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Analyze a click stream; writes the report and <out>.csv histograms.
    Analyze {
        /// Click stream produced by `simulate`.
        stream: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
        /// One minus the confidence level of the p3 upper bound.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Variance ratios over a (g2, C) grid; writes JSON and <out>.csv.
    EfficiencyMap {
        /// Takes p1, eta, delay, pulse period and seed from this file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Pulse budget per method and replica.
        #[arg(long)]
        pulses: Option<u64>,
        #[arg(long, default_value_t = 11)]
        resolution: usize,
        #[arg(long)]
        replications: Option<usize>,
        /// Also run the polarization-visibility experiments.
        #[arg(long)]
        hwp: bool,
    },
    /// Fit (g2, C) to the six zero-lag correlations of a report or matrix file.
    Fit {
        input: PathBuf,
        /// Circuit to assume; balanced when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run quick internal consistency checks.
    Selftest,
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    Mode::parse(s).map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate { run, out } => {
            let cfg = run.load()?;
            println!("{}", app::cmd_simulate(&cfg, &out)?);
        }
        Command::Analyze {
            stream,
            run,
            out,
            alpha,
        } => {
            let cfg = run.load()?;
            let r = app::cmd_analyze(&stream, &cfg, alpha, &out)?;
            let show = |e: Option<sg2::estimator::Estimate>| {
                e.map_or("n/a".to_string(), |e| format!("{:.4} +/- {:.4}", e.value, e.sigma))
            };
            println!("{} config_hash={}", r.tool_version, r.config_hash);
            println!("g2_hbt(0) = {}", show(Some(r.g2_hbt0)));
            println!("C         = {}", show(r.coherence));
            println!("V         = {}", show(r.visibility));
            println!("zeta0     = {}", show(Some(r.zeta.zeta0)));
            println!("tau1      = {}", show(Some(r.zeta.tau1)));
            println!("p(n)      = {:?}{}", r.fock.p, if r.fock.p3_is_upper_bound { " (p3 is an upper bound)" } else { "" });
            for w in &r.warnings {
                println!("warning: {w}");
            }
        }
        Command::EfficiencyMap {
            config,
            out,
            seed,
            pulses,
            resolution,
            replications,
            hwp,
        } => {
            let mut settings = match config {
                Some(p) => app::efficiency_settings(&sg2::config::RunConfig::load(p)?),
                None => Default::default(),
            };
            if let Some(s) = seed {
                settings.seed = s;
            }
            if let Some(n) = pulses {
                settings.n_pulses = n;
            }
            if let Some(r) = replications {
                settings.replications = r;
            }
            settings.include_hwp = hwp;
            let grid = GridSpec {
                resolution,
                ..GridSpec::default()
            };
            let map = app::cmd_efficiency_map(&grid, &settings, &out)?;
            println!("{} config_hash={}", map.tool_version, map.config_hash);
            println!(
                "analytic max {:.3} at (g2 {:.2}, C {:.2}); scoring max {:.3} at (g2 {:.2}, C {:.2})",
                map.argmax_analytic.value,
                map.argmax_analytic.g2,
                map.argmax_analytic.c,
                map.argmax_scoring.value,
                map.argmax_scoring.g2,
                map.argmax_scoring.c
            );
        }
        Command::Fit { input, config, out } => {
            let circuit = config.map(|p| sg2::config::RunConfig::load(p)?.circuit()).transpose()?;
            let f = app::cmd_fit(&input, circuit.as_ref(), &out)?;
            println!(
                "g2_hbt(0) = {:.4} +/- {:.4}, C = {:.4} +/- {:.4}, chi2 = {:.2} ({} dof){}",
                f.fit.g2_hbt0.value,
                f.fit.g2_hbt0.sigma,
                f.fit.coherence.value,
                f.fit.coherence.sigma,
                f.fit.chi2,
                f.fit.dof,
                if f.fit.at_boundary { ", at boundary" } else { "" }
            );
        }
        Command::Selftest => {
            let checks = app::selftest()?;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            return Ok(checks.iter().all(|c| c.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Error::exit_code(&e) as u8)
        }
    }
}
