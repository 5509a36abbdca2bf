//! Append-only JSON-lines checkpoint keyed by domain.
//!
//! A torn final line (from a crash mid-write) is ignored on load.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::probe::ProbeResult;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("checkpoint {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("checkpoint {path} line {line}: {source}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
}

#[derive(Debug, Default)]
pub struct Checkpoint {
    results: HashMap<String, ProbeResult>,
}

impl Checkpoint {
    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let io_err = |source| CheckpointError::Io {
            path: path.into(),
            source,
        };
        let file = match File::open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::default()),
            Err(e) => return Err(io_err(e)),
        };
        let lines: Vec<String> = BufReader::new(file)
            .lines()
            .collect::<Result<_, _>>()
            .map_err(io_err)?;
        let mut results = HashMap::new();
        let last = lines.len();
        for (idx, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<ProbeResult>(line) {
                Ok(r) => {
                    results.insert(r.domain.clone(), r);
                }
                Err(_) if idx + 1 == last => break,
                Err(source) => {
                    return Err(CheckpointError::Corrupt {
                        path: path.into(),
                        line: idx + 1,
                        source,
                    })
                }
            }
        }
        Ok(Checkpoint { results })
    }

    pub fn get(&self, domain: &str) -> Option<&ProbeResult> {
        self.results.get(domain)
    }

    pub fn len(&self) -> usize {
        self.results.len()
    }

    pub fn is_empty(&self) -> bool {
        self.results.is_empty()
    }
}

pub struct CheckpointWriter {
    path: PathBuf,
    out: BufWriter<File>,
    pending: usize,
    flush_every: usize,
}

impl CheckpointWriter {
    /// Opens for appending. A torn trailing line is cut off first so new
    /// records start on a fresh line.
    pub fn open(path: &Path, flush_every: usize) -> Result<Self, CheckpointError> {
        let io_err = |source| CheckpointError::Io {
            path: path.into(),
            source,
        };
        let torn_at = match std::fs::read(path) {
            Ok(bytes) if bytes.last().is_some_and(|b| *b != b'\n') => {
                Some(bytes.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1))
            }
            _ => None,
        };
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io_err)?;
        if let Some(len) = torn_at {
            file.set_len(len as u64).map_err(io_err)?;
        }
        let out = BufWriter::new(file);
        Ok(CheckpointWriter {
            path: path.into(),
            out,
            pending: 0,
            flush_every: flush_every.max(1),
        })
    }

    pub fn append(&mut self, result: &ProbeResult) -> Result<(), CheckpointError> {
        let line = serde_json::to_string(result).expect("probe results serialize");
        let res = writeln!(self.out, "{line}").and_then(|_| {
            self.pending += 1;
            if self.pending >= self.flush_every {
                self.pending = 0;
                self.out.flush()
            } else {
                Ok(())
            }
        });
        res.map_err(|source| CheckpointError::Io {
            path: self.path.clone(),
            source,
        })
    }
}
