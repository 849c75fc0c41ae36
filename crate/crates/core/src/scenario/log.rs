//! JSON-lines episode logs: one [`TickRecord`] per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::TickRecord;
use crate::error::{Error, Result};

pub fn write_jsonl_to<W: Write>(mut w: W, log: &[TickRecord]) -> Result<()> {
    for rec in log {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_jsonl(path: impl AsRef<Path>, log: &[TickRecord]) -> Result<()> {
    write_jsonl_to(BufWriter::new(File::create(path)?), log)
}

pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Vec<TickRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut log = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::Serde(format!("line {}: {e}", i + 1)))?;
        log.push(rec);
    }
    Ok(log)
}
