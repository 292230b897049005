//! Replication checkpoints as JSON lines.
//!
//! Line one identifies the run (design and seed); every later line holds one
//! replication, with numbers stored as raw `f64` bits so a resumed run is bit-identical
//! to an uninterrupted one.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use aldar_core::experiments::RepRecord;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::report::{write_atomic, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    schema_version: String,
    experiment: serde_json::Value,
    seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum StoredCell {
    Ok(Vec<u64>),
    Err(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StoredRep {
    rep: u64,
    cells: Vec<StoredCell>,
}

impl From<&RepRecord> for StoredRep {
    fn from(r: &RepRecord) -> Self {
        let cells = r
            .cells
            .iter()
            .map(|c| match c {
                Ok(v) => StoredCell::Ok(v.iter().map(|x| x.to_bits()).collect()),
                Err(e) => StoredCell::Err(e.clone()),
            })
            .collect();
        Self { rep: r.rep, cells }
    }
}

impl From<StoredRep> for RepRecord {
    fn from(s: StoredRep) -> Self {
        let cells = s
            .cells
            .into_iter()
            .map(|c| match c {
                StoredCell::Ok(v) => Ok(v.into_iter().map(f64::from_bits).collect()),
                StoredCell::Err(e) => Err(e),
            })
            .collect();
        Self { rep: s.rep, cells }
    }
}

pub struct Checkpoint {
    path: PathBuf,
    file: File,
}

fn line_of<T: Serialize>(v: &T) -> CliResult<String> {
    let mut s = serde_json::to_string(v).map_err(|e| CliError::Io(format!("serializing checkpoint: {e}")))?;
    s.push('\n');
    Ok(s)
}

impl Checkpoint {
    /// Opens `path` for the given run, returning the replications already on disk.
    ///
    /// A file written for a different design or seed is an error. A torn final line from
    /// an interrupted write is discarded.
    pub fn open(path: &Path, experiment: &serde_json::Value, seed: u64, resume: bool) -> CliResult<(Self, Vec<RepRecord>)> {
        let header = Header { schema_version: SCHEMA_VERSION.into(), experiment: experiment.clone(), seed };
        let mut done = Vec::new();
        if resume && path.exists() {
            done = read_existing(path, &header)?;
        }
        let mut text = line_of(&header)?;
        for r in &done {
            text.push_str(&line_of(&StoredRep::from(r))?);
        }
        write_atomic(path, &text)?;
        let file = OpenOptions::new().append(true).open(path).map_err(|e| CliError::io(path, e))?;
        Ok((Self { path: path.to_path_buf(), file }, done))
    }

    pub fn append(&mut self, records: &[RepRecord]) -> CliResult<()> {
        let mut text = String::new();
        for r in records {
            text.push_str(&line_of(&StoredRep::from(r))?);
        }
        self.file.write_all(text.as_bytes()).map_err(|e| CliError::io(&self.path, e))?;
        self.file.sync_data().map_err(|e| CliError::io(&self.path, e))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

fn read_existing(path: &Path, expected: &Header) -> CliResult<Vec<RepRecord>> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    let lines: Vec<String> = BufReader::new(f).lines().collect::<Result<_, _>>().map_err(|e| CliError::io(path, e))?;
    let Some(first) = lines.first() else {
        return Ok(Vec::new());
    };
    let header: Header = serde_json::from_str(first).map_err(|e| CliError::Parse(format!("{} line 1: bad checkpoint header: {e}", path.display())))?;
    if &header != expected {
        return Err(CliError::Usage(format!(
            "checkpoint {} was written for a different experiment or seed; remove it or set resume = false",
            path.display()
        )));
    }
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate().skip(1) {
        match serde_json::from_str::<StoredRep>(line) {
            Ok(r) if r.rep == out.len() as u64 => out.push(r.into()),
            Ok(r) => {
                return Err(CliError::Parse(format!("{} line {}: expected replication {}, found {}", path.display(), i + 1, out.len(), r.rep)))
            }
            Err(_) if i + 1 == lines.len() => break,
            Err(e) => return Err(CliError::Parse(format!("{} line {}: {e}", path.display(), i + 1))),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn rec(rep: u64) -> RepRecord {
        RepRecord { rep, cells: vec![Ok(vec![0.1 * rep as f64, f64::NAN, -0.0]), Err("singular".into())] }
    }

    fn same(a: &RepRecord, b: &RepRecord) -> bool {
        let bits = |r: &RepRecord| StoredRep::from(r);
        bits(a) == bits(b)
    }

    #[test]
    fn roundtrip_and_resume() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.ckpt");
        let design = serde_json::json!({"experiment": "table1"});
        let (mut ck, done) = Checkpoint::open(&path, &design, 5, true).unwrap();
        assert!(done.is_empty());
        ck.append(&[rec(0), rec(1)]).unwrap();
        drop(ck);
        let (_, done) = Checkpoint::open(&path, &design, 5, true).unwrap();
        assert_eq!(done.len(), 2);
        assert!(same(&done[1], &rec(1)));
    }

    #[test]
    fn torn_tail_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.ckpt");
        let design = serde_json::json!({"experiment": "table1"});
        let (mut ck, _) = Checkpoint::open(&path, &design, 5, true).unwrap();
        ck.append(&[rec(0)]).unwrap();
        drop(ck);
        let mut text = fs::read_to_string(&path).unwrap();
        text.push_str("{\"rep\":1,\"ce");
        fs::write(&path, text).unwrap();
        let (_, done) = Checkpoint::open(&path, &design, 5, true).unwrap();
        assert_eq!(done.len(), 1);
    }

    #[test]
    fn mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.ckpt");
        let design = serde_json::json!({"experiment": "table1"});
        Checkpoint::open(&path, &design, 5, true).unwrap();
        assert!(matches!(Checkpoint::open(&path, &design, 6, true), Err(CliError::Usage(_))));
        assert!(Checkpoint::open(&path, &design, 6, false).is_ok());
    }
}
