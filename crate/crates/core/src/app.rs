//! Command implementations behind the `sg2` binary.
//!
//! Each command takes already-parsed arguments, writes its files and
//! returns a value for the caller to print, so the commands can be driven
//! from tests without spawning a process.

use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::circuit::{hom_coincidence, permanent, CircuitModel};
use crate::config::RunConfig;
use crate::efficiency::{scoring_map, variance_ratio_c, EfficiencySettings, GridSpec, ScoringMap};
use crate::error::{invalid, Error, Result};
use crate::estimator::{analyze, verify_stream_origin, write_correlation_csv, AnalysisOptions, Sg2Report, PAIRS};
use crate::fitter::{fit_poisson, predict_matrix, Bunching, CorrelationMatrix, FitResult};
use crate::fock::zeta;
use crate::simulate::{hex, run_experiment_with_tally, ClickStream, EmissionTally, Mode};
use crate::TOOL_VERSION;

/// Command-line values that take precedence over the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
    pub pulses: Option<u64>,
}

impl Overrides {
    /// Applies the overrides and re-validates the result.
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(s) = self.seed {
            cfg.run.seed = s;
        }
        if let Some(m) = self.mode {
            cfg.run.mode = m;
        }
        if let Some(n) = self.pulses {
            cfg.run.n_pulses = n;
        }
        cfg.experiment().map(|_| ())
    }
}

/// Loads a configuration file and applies `overrides`.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    overrides.apply(&mut cfg)?;
    Ok(cfg)
}

/// Path of a companion file: `run.sg2c` becomes `run.sg2c.json`.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub tool_version: String,
    pub config_hash: String,
    pub mode: Mode,
    pub n_pulses: u64,
    pub records: usize,
    /// Clicks per detector A-D.
    pub singles: [u64; 4],
    /// Pulses with exactly 1, 2, 3 and 4 detectors firing.
    pub multiplicity: [u64; 4],
    pub tally: EmissionTally,
    pub config: RunConfig,
}

impl fmt::Display for SimulationSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.n_pulses as f64;
        writeln!(f, "{} config_hash={}", self.tool_version, self.config_hash)?;
        writeln!(f, "mode {} over {} pulses, {} click records", self.mode.as_str(), self.n_pulses, self.records)?;
        for (k, name) in ['A', 'B', 'C', 'D'].iter().enumerate() {
            writeln!(f, "  singles {name}: {:>10}  ({:.4e} per pulse)", self.singles[k], self.singles[k] as f64 / n)?;
        }
        writeln!(
            f,
            "  detectors firing together: 1:{} 2:{} 3:{} 4:{}",
            self.multiplicity[0], self.multiplicity[1], self.multiplicity[2], self.multiplicity[3]
        )?;
        let t = &self.tally;
        write!(
            f,
            "  emitted: {} photons ({} transmitted); pulses with 1/2/3 photons: {}/{}/{}",
            t.photons_emitted,
            t.photons_transmitted,
            t.pulses_by_number[1],
            t.pulses_by_number[2],
            t.pulses_by_number[3]
        )
    }
}

/// Simulates the configured experiment, writes the click stream to `out`
/// (CSV for a `.csv` path, binary otherwise) and a summary to
/// `<out>.json`.
pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<SimulationSummary> {
    let exp = cfg.experiment()?;
    let (stream, tally) = run_experiment_with_tally(&exp)?;
    stream.save(out)?;
    let summary = SimulationSummary {
        tool_version: TOOL_VERSION.into(),
        config_hash: stream.config_hash_hex(),
        mode: exp.mode,
        n_pulses: stream.n_pulses(),
        records: stream.records().len(),
        singles: stream.singles(),
        multiplicity: std::array::from_fn(|k| stream.multiplicity(k as u32 + 1)),
        tally,
        config: cfg.clone(),
    };
    std::fs::write(sidecar(out, ".json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

/// Analyzes a stream recorded under `cfg`. Writes the report to `out` and
/// the per-pair correlation histograms to `<out>.csv`.
///
/// The pulse count is taken from the stream itself; every other setting,
/// the mode in particular, must match the configuration that produced it.
pub fn cmd_analyze(stream_path: &Path, cfg: &RunConfig, alpha: Option<f64>, out: &Path) -> Result<Sg2Report> {
    let stream = ClickStream::load(stream_path)?;
    let mut cfg = cfg.clone();
    cfg.run.n_pulses = stream.n_pulses();
    let exp = cfg.experiment()?;
    verify_stream_origin(&stream, &exp)?;
    let mut opts = AnalysisOptions::from_config(&exp, cfg.run.max_lag);
    if let Some(a) = alpha {
        if !(a > 0.0 && a < 1.0) {
            return Err(invalid(format!("alpha {a} outside (0, 1)")));
        }
        opts.alpha = a;
    }
    let analysis = analyze(&stream, &opts)?;
    std::fs::write(out, analysis.report.to_json()?)?;
    write_correlation_csv(
        &analysis.correlations,
        &analysis.report.config_hash,
        BufWriter::new(File::create(sidecar(out, ".csv"))?),
    )?;
    Ok(analysis.report)
}

/// Efficiency-study settings matching a run configuration's source and
/// interferometer. The pulse budget is not taken from the configuration,
/// since a map runs thousands of simulations.
pub fn efficiency_settings(cfg: &RunConfig) -> EfficiencySettings {
    EfficiencySettings {
        p1: cfg.source.p1,
        efficiency: cfg.detection.eta,
        delay_pulses: cfg.circuit.delay_pulses,
        pulse_period_ns: cfg.source.pulse_period_ns,
        seed: cfg.run.seed,
        ..EfficiencySettings::default()
    }
}

/// Computes a scoring map, writing JSON to `out` and CSV to `<out>.csv`.
pub fn cmd_efficiency_map(grid: &GridSpec, settings: &EfficiencySettings, out: &Path) -> Result<ScoringMap> {
    let map = scoring_map(grid, settings)?;
    std::fs::write(out, map.to_json()?)?;
    map.write_csv(BufWriter::new(File::create(sidecar(out, ".csv"))?))?;
    Ok(map)
}

#[derive(Debug, Clone, Serialize)]
pub struct FitOutput {
    pub tool_version: String,
    /// Hash carried by the input report, or the SHA-256 of a matrix file.
    pub config_hash: String,
    pub input: String,
    pub matrix: CorrelationMatrix,
    pub bunching: Bunching,
    pub fit: FitResult,
}

fn number(v: &Value, what: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| invalid(format!("{what} is missing or not a number")))
}

fn matrix_from_report(v: &Value) -> Result<CorrelationMatrix> {
    let zl = &v["zero_lag"];
    let mut m = CorrelationMatrix {
        values: [0.0; 6],
        sigmas: [0.0; 6],
    };
    for (p, &(l, k)) in PAIRS.iter().enumerate() {
        let name = format!("{}{}", crate::simulate::DETECTORS[l], crate::simulate::DETECTORS[k]);
        m.values[p] = number(&zl[&name]["value"], &format!("zero_lag.{name}.value"))?;
        m.sigmas[p] = number(&zl[&name]["sigma"], &format!("zero_lag.{name}.sigma"))?;
    }
    Ok(m)
}

fn array6(v: &Value, what: &str) -> Result<[f64; 6]> {
    let a = v
        .as_array()
        .filter(|a| a.len() == 6)
        .ok_or_else(|| Error::Dimension(format!("{what} must be an array of six numbers")))?;
    let mut out = [0.0; 6];
    for (o, x) in out.iter_mut().zip(a) {
        *o = number(x, what)?;
    }
    Ok(out)
}

/// Fits `(g2_hbt0, C)` to the six zero-lag correlations.
///
/// The input is either an analysis report or a matrix file of the form
/// `{"values": [..6], "sigmas": [..6], "zeta0": .., "zeta_delay": ..,
/// "delay_pulses": ..}` with the last three optional. Without an explicit
/// `circuit`, a balanced interferometer is assumed.
pub fn cmd_fit(input: &Path, circuit: Option<&CircuitModel>, out: &Path) -> Result<FitOutput> {
    let bytes = std::fs::read(input)?;
    let v: Value = serde_json::from_slice(&bytes)?;
    let (kind, matrix, bunching, delay, hash) = if v.get("zero_lag").is_some() {
        let delay = v["delay_pulses"].as_u64().unwrap_or(4);
        let zeta0 = number(&v["zeta"]["zeta0"]["value"], "zeta.zeta0.value")?;
        // An unidentified tau1 is serialized as null; the plateau is then flat.
        let tau1 = v["zeta"]["tau1"]["value"].as_f64().unwrap_or(f64::INFINITY);
        let hash = v["config_hash"].as_str().unwrap_or_default().to_string();
        let b = Bunching {
            zeta0,
            zeta_delay: zeta(delay as i64, zeta0, tau1),
        };
        ("report", matrix_from_report(&v)?, b, delay, hash)
    } else if v.get("values").is_some() {
        let m = CorrelationMatrix {
            values: array6(&v["values"], "values")?,
            sigmas: array6(&v["sigmas"], "sigmas")?,
        };
        let b = Bunching {
            zeta0: v["zeta0"].as_f64().unwrap_or(1.0),
            zeta_delay: v["zeta_delay"].as_f64().unwrap_or(1.0),
        };
        let delay = v["delay_pulses"].as_u64().unwrap_or(4);
        ("matrix", m, b, delay, hex(&Sha256::digest(&bytes)))
    } else {
        return Err(invalid("fit input needs either `zero_lag` (a report) or `values` and `sigmas`"));
    };
    let balanced = CircuitModel::balanced(delay);
    let fit = fit_poisson(&matrix, circuit.unwrap_or(&balanced), bunching)?;
    let output = FitOutput {
        tool_version: TOOL_VERSION.into(),
        config_hash: hash,
        input: kind.into(),
        matrix,
        bunching,
        fit,
    };
    std::fs::write(out, serde_json::to_string_pretty(&output)?)?;
    Ok(output)
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

/// Fast internal consistency checks, a few seconds in total.
pub fn selftest() -> Result<Vec<Check>> {
    use num_complex::Complex64;
    let mut out = Vec::new();

    // Permanent of the all-ones 4x4 matrix is 4!.
    let ones = vec![vec![Complex64::new(1.0, 0.0); 4]; 4];
    let p = permanent(&ones)?;
    out.push(check("permanent", (p.re - 24.0).abs() < 1e-12 && p.im.abs() < 1e-12, format!("perm(J4) = {p}")));

    let hom = hom_coincidence(1.0, 0.5f64.sqrt(), 0.5f64.sqrt());
    out.push(check("hom-dip", hom.abs() < 1e-12, format!("coincidence at unit overlap = {hom:.2e}")));

    let circuit = CircuitModel::balanced(4);
    let pred = predict_matrix(0.0, 1.0, &circuit, Bunching::NONE)?;
    out.push(check(
        "ideal-correlations",
        (pred[0] - 1.0).abs() < 1e-12 && pred[2].abs() < 1e-12,
        format!("auto {:.6}, cross {:.6}", pred[0], pred[2]),
    ));

    let truth = predict_matrix(0.3, 0.7, &circuit, Bunching::NONE)?;
    let m = CorrelationMatrix {
        values: truth,
        sigmas: [0.01; 6],
    };
    let f = crate::fitter::fit(&m, &circuit, Bunching::NONE)?;
    out.push(check(
        "fit-inversion",
        (f.g2_hbt0.value - 0.3).abs() < 1e-4 && (f.coherence.value - 0.7).abs() < 1e-4,
        format!("g2 {:.6}, C {:.6}", f.g2_hbt0.value, f.coherence.value),
    ));

    let (r1, r2) = (variance_ratio_c(0.0, 1.0), variance_ratio_c(1.0, 0.0));
    out.push(check(
        "variance-ratio",
        (r1 - 1.0).abs() < 1e-12 && (r2 - 2.0).abs() < 1e-12,
        format!("(0,1) -> {r1}, (1,0) -> {r2}"),
    ));

    let mut cfg = RunConfig::from_toml_str(SELFTEST_CONFIG)?;
    let a = crate::simulate::run_experiment(&cfg.experiment()?)?;
    let b = crate::simulate::run_experiment(&cfg.experiment()?)?;
    out.push(check("determinism", a == b, format!("{} records", a.records().len())));

    let mut bin = Vec::new();
    a.write_binary(&mut bin)?;
    let mut csv = Vec::new();
    a.write_csv(&mut csv)?;
    let round = ClickStream::from_bytes(&bin)? == a && ClickStream::read_csv(&csv[..])? == a;
    out.push(check("stream-round-trip", round, format!("{} binary bytes", bin.len())));

    let exp = cfg.experiment()?;
    let report = analyze(&a, &AnalysisOptions::from_config(&exp, cfg.run.max_lag))?.report;
    let c = report.coherence.map_or(f64::NAN, |e| e.value);
    let g = report.g2_hbt0.value;
    out.push(check(
        "pipeline",
        (g - 0.05).abs() < 0.15 && (c - 0.61).abs() < 0.15,
        format!("g2 {g:.3} (0.05), C {c:.3} (0.61) from {} pulses", cfg.run.n_pulses),
    ));

    cfg.run.mode = Mode::Hbt;
    let guard = verify_stream_origin(&a, &cfg.experiment()?);
    out.push(check(
        "mode-guard",
        matches!(guard, Err(Error::ConfigMismatch(_))),
        "sg2 stream refused under hbt configuration".into(),
    ));
    Ok(out)
}

const SELFTEST_CONFIG: &str = r#"
[source]
p1 = 0.029
g2_target = 0.05
C = 0.61
zeta0 = 1.34
tau1 = 3.64
pulse_period_ns = 6.575

[circuit]
r2 = 0.7071067811865476
t2 = 0.7071067811865476
r3 = 0.7071067811865476
t3 = 0.7071067811865476
r4 = 0.7071067811865476
t4 = 0.7071067811865476
delay_pulses = 4

[detection]
eta = 1.0
dark_prob = 0.0

[run]
n_pulses = 2000000
seed = 11
mode = "sg2"
max_lag = 20
"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_appends_suffix() {
        assert_eq!(sidecar(Path::new("a/run.sg2c"), ".json"), PathBuf::from("a/run.sg2c.json"));
    }

    #[test]
    fn overrides_are_validated() {
        let mut cfg = RunConfig::from_toml_str(SELFTEST_CONFIG).unwrap();
        let bad = Overrides {
            pulses: Some(0),
            ..Overrides::default()
        };
        assert_eq!(bad.apply(&mut cfg).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn fit_reads_matrix_files() {
        let dir = tempfile::tempdir().unwrap();
        let circuit = CircuitModel::balanced(4);
        let values = predict_matrix(0.2, 0.5, &circuit, Bunching::NONE).unwrap();
        let input = dir.path().join("m.json");
        std::fs::write(&input, serde_json::json!({"values": values, "sigmas": vec![0.01; 6]}).to_string()).unwrap();
        let out = cmd_fit(&input, None, &dir.path().join("fit.json")).unwrap();
        assert!((out.fit.g2_hbt0.value - 0.2).abs() < 1e-4);
        assert!((out.fit.coherence.value - 0.5).abs() < 1e-4);
        assert_eq!(out.config_hash.len(), 64);
    }

    #[test]
    fn fit_rejects_short_matrix() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("m.json");
        std::fs::write(&input, r#"{"values": [1, 2], "sigmas": [1, 1]}"#).unwrap();
        let err = cmd_fit(&input, None, &dir.path().join("fit.json")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
