//! CSV emission. Every file opens with a `#` line carrying the SHA-256 of
//! the config text and the effective seed, followed by an RFC 4180 table.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::HarnessError;

pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Provenance line shared by every output file of one run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunStamp {
    pub config_sha256: String,
    pub seed: u64,
}

impl RunStamp {
    pub fn new(config_text: &str, seed: u64) -> Self {
        RunStamp {
            config_sha256: config_hash(config_text),
            seed,
        }
    }

    pub fn header(&self) -> String {
        format!("# config_sha256={} seed={}", self.config_sha256, self.seed)
    }
}

/// Writes `rows` under `header` to `path`.
pub fn write_csv<P: AsRef<Path>>(
    path: P,
    stamp: &RunStamp,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(), HarnessError> {
    let mut file = BufWriter::new(File::create(path)?);
    write_csv_to(&mut file, stamp, header, rows)?;
    file.flush()?;
    Ok(())
}

pub fn write_csv_to<W: Write>(
    mut w: W,
    stamp: &RunStamp,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(), HarnessError> {
    writeln!(w, "{}", stamp.header())?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(header)?;
    for r in rows {
        csv.write_record(r)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}
