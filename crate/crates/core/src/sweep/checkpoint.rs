//! Append-only text log of finished cells.
//!
//! ```text
//! fhnburst-checkpoint 1
//! spec <sha256 hex>
//! <index>\t<status>\t<spike_count>\t<l2 bits hex>\t<est_count>\t<region>
//! ```
//!
//! Floats are stored as their IEEE bit patterns so a resumed sweep reproduces
//! the uninterrupted one exactly. A trailing line without a newline is a torn
//! write and is discarded on open.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{io_err, write_atomic, CellRecord, CellStatus, SweepError};

pub const CHECKPOINT_MAGIC: &str = "fhnburst-checkpoint 1";

#[derive(Debug)]
pub struct CheckpointLog {
    path: PathBuf,
    hash: String,
    records: BTreeMap<usize, CellRecord>,
    file: File,
}

fn encode(idx: usize, c: &CellRecord) -> String {
    let opt = |v: Option<String>| v.unwrap_or_default();
    format!(
        "{idx}\t{}\t{}\t{}\t{}\t{}\n",
        c.status,
        opt(c.spike_count.map(|v| v.to_string())),
        opt(c.l2.map(|v| format!("{:016x}", v.to_bits()))),
        opt(c.est_count.map(|v| v.to_string())),
        opt(c.region.map(|r| r.to_string())),
    )
}

fn decode(line: &str) -> Result<(usize, CellRecord), String> {
    let f: Vec<&str> = line.split('\t').collect();
    if f.len() != 6 {
        return Err(format!("expected 6 fields, got {}", f.len()));
    }
    let idx = f[0].parse::<usize>().map_err(|e| e.to_string())?;
    let opt_u = |s: &str| -> Result<Option<u32>, String> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|e: std::num::ParseIntError| e.to_string())
        }
    };
    let l2 = if f[3].is_empty() {
        None
    } else {
        Some(f64::from_bits(
            u64::from_str_radix(f[3], 16).map_err(|e| e.to_string())?,
        ))
    };
    Ok((
        idx,
        CellRecord {
            omega: f64::NAN,
            amplitude: f64::NAN,
            status: f[1].parse::<CellStatus>()?,
            spike_count: opt_u(f[2])?,
            l2,
            est_count: opt_u(f[4])?,
            region: if f[5].is_empty() { None } else { Some(f[5].parse()?) },
        },
    ))
}

impl CheckpointLog {
    /// Opens an existing log for `hash` or starts a new one.
    pub fn open(path: &Path, hash: &str, total: usize) -> Result<Self, SweepError> {
        let mut records = BTreeMap::new();
        if path.exists() {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            let complete = text.rfind('\n').map_or(0, |i| i + 1);
            let corrupt = |line: usize, reason: String| SweepError::CorruptCheckpoint {
                path: path.to_path_buf(),
                line,
                reason,
            };
            let mut lines = text[..complete].lines();
            if lines.next() != Some(CHECKPOINT_MAGIC) {
                return Err(corrupt(1, "bad header".into()));
            }
            let found = lines
                .next()
                .and_then(|l| l.strip_prefix("spec "))
                .ok_or_else(|| corrupt(2, "missing spec hash".into()))?;
            if found != hash {
                return Err(SweepError::CheckpointMismatch {
                    path: path.to_path_buf(),
                    found: found.to_string(),
                    expected: hash.to_string(),
                });
            }
            for (n, line) in lines.enumerate() {
                let (idx, rec) = decode(line).map_err(|r| corrupt(n + 3, r))?;
                if idx >= total {
                    return Err(corrupt(n + 3, format!("cell index {idx} out of range")));
                }
                records.entry(idx).or_insert(rec);
            }
            if complete < text.len() {
                let f = OpenOptions::new().write(true).open(path).map_err(io_err(path))?;
                f.set_len(complete as u64).map_err(io_err(path))?;
            }
        } else {
            write_atomic(path, format!("{CHECKPOINT_MAGIC}\nspec {hash}\n").as_bytes())?;
        }
        let file = OpenOptions::new().append(true).open(path).map_err(io_err(path))?;
        Ok(Self {
            path: path.to_path_buf(),
            hash: hash.to_string(),
            records,
            file,
        })
    }

    pub fn records(&self) -> &BTreeMap<usize, CellRecord> {
        &self.records
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends finished cells and syncs them to disk.
    pub fn append<'a>(
        &mut self,
        cells: impl IntoIterator<Item = (usize, &'a CellRecord)>,
    ) -> Result<(), SweepError> {
        let mut buf = String::new();
        for (idx, c) in cells {
            buf.push_str(&encode(idx, c));
            self.records.entry(idx).or_insert_with(|| c.clone());
        }
        self.file.write_all(buf.as_bytes()).map_err(io_err(&self.path))?;
        self.file.sync_data().map_err(io_err(&self.path))
    }

    /// Rewrites the log sorted by cell index, atomically.
    pub fn compact(&mut self) -> Result<(), SweepError> {
        let mut text = format!("{CHECKPOINT_MAGIC}\nspec {}\n", self.hash);
        for (idx, c) in &self.records {
            text.push_str(&encode(*idx, c));
        }
        write_atomic(&self.path, text.as_bytes())?;
        self.file = OpenOptions::new()
            .append(true)
            .open(&self.path)
            .map_err(io_err(&self.path))?;
        Ok(())
    }
}
