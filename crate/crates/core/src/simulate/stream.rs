//! Click streams and their on-disk formats.
//!
//! Binary layout (little-endian):
//!
//! ```text
//! magic    4 bytes  "SG2C"
//! version  u32      1
//! n_pulses u64
//! hash     32 bytes SHA-256 of the generating configuration
//! records  repeated { pulse_index: u64, detector_mask: u8 }
//! ```
//!
//! The CSV form starts with a `#` metadata line carrying `n_pulses` and the
//! hash, followed by the header `pulse_index,detectors` and one row per
//! record with the detectors spelled as a subset of `ABCD`.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufRead, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SG2C";
pub const FORMAT_VERSION: u32 = 1;
pub const DETECTORS: [char; 4] = ['A', 'B', 'C', 'D'];

pub const HEADER_LEN: u64 = 4 + 4 + 8 + 32;
pub const RECORD_LEN: u64 = 9;

/// One pulse with at least one click.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClickRecord {
    pub pulse_index: u64,
    /// Bit `k` set when detector `DETECTORS[k]` fired.
    pub detector_mask: u8,
}

impl ClickRecord {
    pub fn fired(&self, detector: usize) -> bool {
        self.detector_mask & (1 << detector) != 0
    }

    pub fn clicks(&self) -> u32 {
        self.detector_mask.count_ones()
    }
}

/// Ordered click records of an experiment. Pulses without clicks are not
/// stored but are counted in `n_pulses`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClickStream {
    records: Vec<ClickRecord>,
    n_pulses: u64,
    config_hash: [u8; 32],
}

impl ClickStream {
    pub fn new(records: Vec<ClickRecord>, n_pulses: u64, config_hash: [u8; 32]) -> Result<Self> {
        for w in records.windows(2) {
            if w[1].pulse_index <= w[0].pulse_index {
                return Err(Error::Invalid(format!(
                    "pulse indices not strictly increasing at {}",
                    w[1].pulse_index
                )));
            }
        }
        if let Some(r) = records.iter().find(|r| r.detector_mask == 0 || r.detector_mask > 0xF) {
            return Err(Error::Invalid(format!(
                "pulse {} has invalid detector mask {:#x}",
                r.pulse_index, r.detector_mask
            )));
        }
        if let Some(last) = records.last() {
            if last.pulse_index >= n_pulses {
                return Err(Error::Invalid(format!(
                    "pulse {} beyond n_pulses = {n_pulses}",
                    last.pulse_index
                )));
            }
        }
        Ok(ClickStream {
            records,
            n_pulses,
            config_hash,
        })
    }

    pub fn records(&self) -> &[ClickRecord] {
        &self.records
    }

    pub fn n_pulses(&self) -> u64 {
        self.n_pulses
    }

    pub fn config_hash(&self) -> &[u8; 32] {
        &self.config_hash
    }

    pub fn config_hash_hex(&self) -> String {
        hex(&self.config_hash)
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Clicks per detector.
    pub fn singles(&self) -> [u64; 4] {
        let mut out = [0u64; 4];
        for r in &self.records {
            for (k, slot) in out.iter_mut().enumerate() {
                if r.fired(k) {
                    *slot += 1;
                }
            }
        }
        out
    }

    /// Pulses with exactly `n` detectors firing.
    pub fn multiplicity(&self, n: u32) -> u64 {
        self.records.iter().filter(|r| r.clicks() == n).count() as u64
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&self.n_pulses.to_le_bytes())?;
        w.write_all(&self.config_hash)?;
        let mut buf = Vec::with_capacity(self.records.len() * RECORD_LEN as usize);
        for r in &self.records {
            buf.extend_from_slice(&r.pulse_index.to_le_bytes());
            buf.push(r.detector_mask);
        }
        w.write_all(&buf)?;
        w.flush()
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let len = bytes.len() as u64;
        if len < HEADER_LEN {
            return Err(Error::Format {
                offset: len,
                reason: format!("truncated header ({len} of {HEADER_LEN} bytes)"),
            });
        }
        if &bytes[0..4] != MAGIC {
            return Err(Error::Format {
                offset: 0,
                reason: "bad magic, expected \"SG2C\"".into(),
            });
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(Error::Version {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let n_pulses = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
        let mut config_hash = [0u8; 32];
        config_hash.copy_from_slice(&bytes[16..48]);
        let body = &bytes[HEADER_LEN as usize..];
        let whole = body.len() as u64 / RECORD_LEN;
        if body.len() as u64 % RECORD_LEN != 0 {
            return Err(Error::Format {
                offset: HEADER_LEN + whole * RECORD_LEN,
                reason: "truncated record".into(),
            });
        }
        let records = body
            .chunks_exact(RECORD_LEN as usize)
            .map(|c| ClickRecord {
                pulse_index: u64::from_le_bytes(c[0..8].try_into().expect("8 bytes")),
                detector_mask: c[8],
            })
            .collect();
        Self::new(records, n_pulses, config_hash)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "# sg2-clickstream v{FORMAT_VERSION} n_pulses={} config_hash={} tool={}",
            self.n_pulses,
            self.config_hash_hex(),
            crate::TOOL_VERSION.replace(' ', "/")
        )?;
        writeln!(w, "pulse_index,detectors")?;
        let mut line = String::new();
        for r in &self.records {
            line.clear();
            let _ = write!(line, "{},", r.pulse_index);
            line.extend(mask_to_letters(r.detector_mask).chars());
            writeln!(w, "{line}")?;
        }
        w.flush()
    }

    /// Writes CSV when the path ends in `.csv`, binary otherwise.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let w = io::BufWriter::new(File::create(path)?);
        if is_csv(path) {
            self.write_csv(w)?;
        } else {
            self.write_binary(w)?;
        }
        Ok(())
    }

    /// Reads either format, recognizing binary files by their magic bytes.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        if bytes.starts_with(MAGIC) || bytes.first().is_some_and(|&b| b != b'#') {
            Self::from_bytes(&bytes)
        } else {
            Self::read_csv(io::Cursor::new(bytes))
        }
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut n_pulses = None;
        let mut hash = [0u8; 32];
        let mut records = Vec::new();
        let mut offset = 0u64;
        for line in r.lines() {
            let line = line?;
            let here = offset;
            offset += line.len() as u64 + 1;
            let trimmed = line.trim();
            if let Some(meta) = trimmed.strip_prefix('#') {
                for field in meta.split_whitespace() {
                    if let Some(v) = field.strip_prefix('v').and_then(|v| v.parse::<u32>().ok()) {
                        if v != FORMAT_VERSION {
                            return Err(Error::Version {
                                found: v,
                                expected: FORMAT_VERSION,
                            });
                        }
                    } else if let Some(v) = field.strip_prefix("n_pulses=") {
                        n_pulses = Some(v.parse::<u64>().map_err(|e| Error::Format {
                            offset: here,
                            reason: format!("bad n_pulses: {e}"),
                        })?);
                    } else if let Some(v) = field.strip_prefix("config_hash=") {
                        hash = parse_hash(v).ok_or_else(|| Error::Format {
                            offset: here,
                            reason: "bad config hash".into(),
                        })?;
                    }
                }
                continue;
            }
            if trimmed.is_empty() || trimmed == "pulse_index,detectors" {
                continue;
            }
            let (idx, dets) = trimmed.split_once(',').ok_or_else(|| Error::Format {
                offset: here,
                reason: format!("expected `pulse_index,detectors`, got {trimmed:?}"),
            })?;
            let pulse_index = idx.parse::<u64>().map_err(|e| Error::Format {
                offset: here,
                reason: format!("bad pulse index: {e}"),
            })?;
            let detector_mask = letters_to_mask(dets).ok_or_else(|| Error::Format {
                offset: here,
                reason: format!("bad detector set {dets:?}"),
            })?;
            records.push(ClickRecord {
                pulse_index,
                detector_mask,
            });
        }
        let n_pulses = n_pulses.ok_or_else(|| Error::Format {
            offset: 0,
            reason: "missing `# ... n_pulses=` metadata line".into(),
        })?;
        Self::new(records, n_pulses, hash)
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn mask_to_letters(mask: u8) -> String {
    DETECTORS
        .iter()
        .enumerate()
        .filter(|(k, _)| mask & (1 << k) != 0)
        .map(|(_, c)| *c)
        .collect()
}

pub fn letters_to_mask(s: &str) -> Option<u8> {
    let mut mask = 0u8;
    for ch in s.trim().chars() {
        let k = DETECTORS.iter().position(|&d| d == ch.to_ascii_uppercase())?;
        mask |= 1 << k;
    }
    (mask != 0).then_some(mask)
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn parse_hash(s: &str) -> Option<[u8; 32]> {
    if s.len() != 64 {
        return None;
    }
    let mut out = [0u8; 32];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).ok()?;
    }
    Some(out)
}
