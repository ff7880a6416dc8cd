//! Writes a short click stream in both formats, reads them back and shows
//! the layout: a 48-byte binary header (magic, version, pulse count,
//! configuration hash) followed by 9-byte records, or a commented CSV.
//!
//! `cargo run --release --example stream_io [dir]`

use std::path::PathBuf;

use sg2::config::RunConfig;
use sg2::simulate::{mask_to_letters, run_experiment, ClickStream, HEADER_LEN, RECORD_LEN};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().display().to_string()));
    let mut cfg = RunConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/reference.toml"))?;
    cfg.run.n_pulses = 2_000;
    let stream = run_experiment(&cfg.experiment()?)?;

    let bin = dir.join("sg2_example.sg2c");
    let csv = dir.join("sg2_example.csv");
    stream.save(&bin)?;
    stream.save(&csv)?;
    let size = std::fs::metadata(&bin)?.len();
    println!("{} records, binary {} bytes = {HEADER_LEN} + {} x {RECORD_LEN}", stream.records().len(), size, stream.records().len());
    for line in std::fs::read_to_string(&csv)?.lines().take(6) {
        println!("  {line}");
    }
    assert_eq!(ClickStream::load(&bin)?, stream);
    assert_eq!(ClickStream::load(&csv)?, stream);
    println!("both files read back identically; config hash {}", stream.config_hash_hex());
    if let Some(r) = stream.records().iter().find(|r| r.clicks() > 1) {
        println!("first multi-click pulse: {} fired {}", r.pulse_index, mask_to_letters(r.detector_mask));
    }

    let bytes = std::fs::read(&bin)?;
    match ClickStream::from_bytes(&bytes[..bytes.len() - 3]) {
        Err(e) => println!("truncated copy: {e}"),
        Ok(_) => println!("truncated copy unexpectedly parsed"),
    }
    Ok(())
}
