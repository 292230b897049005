//! JSON report envelope and aligned text tables.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::data::InputSeries;
use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: &str = "1";

/// Every JSON report carries the schema version, the resolved configuration and the seed.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub schema_version: &'static str,
    pub command: &'a str,
    pub aldar_version: &'static str,
    pub seed: Option<u64>,
    pub config: &'a BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<&'a InputSeries>,
    pub result: T,
}

impl<'a, T: Serialize> Envelope<'a, T> {
    pub fn new(command: &'a str, seed: Option<u64>, config: &'a BTreeMap<String, String>, input: Option<&'a InputSeries>, result: T) -> Self {
        Self { schema_version: SCHEMA_VERSION, command, aldar_version: env!("CARGO_PKG_VERSION"), seed, config, input, result }
    }

    pub fn to_json(&self) -> CliResult<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| CliError::Io(format!("serializing report: {e}")))?;
        s.push('\n');
        Ok(s)
    }
}

/// Fails early when the directory that will hold `path` does not exist.
pub fn check_writable(path: &Path) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => return Ok(()),
    };
    if dir.is_dir() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("output directory {} does not exist", dir.display())))
    }
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let tmp = sibling(path, ".tmp");
    fs::write(&tmp, contents).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// `path` with `suffix` appended to its file name.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "NA".into()
    } else if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e6) {
        format!("{v:.3e}")
    } else {
        format!("{v:.4}")
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_else(|| "-".into())
}

#[derive(Debug, Clone, Default)]
pub struct TextTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl TextTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn row<S: Into<String>>(&mut self, cells: impl IntoIterator<Item = S>) {
        self.rows.push(cells.into_iter().map(Into::into).collect());
    }

    /// Left-aligned first column, right-aligned others.
    pub fn render(&self) -> String {
        let cols = self.header.len();
        let mut width = vec![0; cols];
        for r in std::iter::once(&self.header).chain(&self.rows) {
            for (i, c) in r.iter().enumerate().take(cols) {
                width[i] = width[i].max(c.chars().count());
            }
        }
        let line = |r: &Vec<String>| {
            let cells: Vec<String> = (0..cols)
                .map(|i| {
                    let c = r.get(i).map(String::as_str).unwrap_or("");
                    if i == 0 {
                        format!("{c:<w$}", w = width[i])
                    } else {
                        format!("{c:>w$}", w = width[i])
                    }
                })
                .collect();
            cells.join("  ").trim_end().to_string()
        };
        let mut out = line(&self.header);
        out.push('\n');
        out.push_str(&width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_alignment() {
        let mut t = TextTable::new(["name", "value"]);
        t.row(["alpha1", "-0.0800"]);
        t.row(["omega", "0.9880"]);
        let s = t.render();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "name      value");
        assert_eq!(lines[2], "alpha1  -0.0800");
        assert_eq!(lines[3], "omega    0.9880");
    }

    #[test]
    fn envelope_fields() {
        let cfg = BTreeMap::from([("p".to_string(), "1".to_string())]);
        let e = Envelope::new("fit", Some(7), &cfg, None, 1.5);
        let v: serde_json::Value = serde_json::from_str(&e.to_json().unwrap()).unwrap();
        assert_eq!(v["schema_version"], "1");
        assert_eq!(v["seed"], 7);
        assert_eq!(v["config"]["p"], "1");
        assert!(v.get("input").is_none());
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.5), "0.5000");
        assert_eq!(fmt_num(1e-5), "1.000e-5");
        assert_eq!(fmt_num(f64::NAN), "NA");
    }
}
