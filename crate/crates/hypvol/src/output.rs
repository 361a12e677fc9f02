// SPDX-License-Identifier: MIT OR Apache-2.0

//! CSV series and JSON summaries with a common header.
//!
//! CSV files start with `#` comment lines carrying the tool version, the
//! subcommand, the SHA-256 of the effective configuration and one
//! `# quantity:` line per column. Floats use Rust's shortest round-trip
//! scientific form, so identical runs give identical bytes.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, Result};

/// Provenance written at the top of every output file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Header {
    /// Tool name.
    pub tool: &'static str,
    /// Crate version.
    pub version: &'static str,
    /// Subcommand.
    pub command: String,
    /// SHA-256 of the effective configuration.
    pub config_sha256: String,
}

impl Header {
    /// Header for `command` with the given configuration hash.
    pub fn new(command: &str, config_sha256: String) -> Self {
        Self { tool: "hypvol", version: env!("CARGO_PKG_VERSION"), command: command.to_string(), config_sha256 }
    }
}

/// A column and what it holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Column {
    /// CSV header name.
    pub name: &'static str,
    /// Quantity tag.
    pub quantity: &'static str,
}

/// Shorthand for [`Column`].
pub const fn col(name: &'static str, quantity: &'static str) -> Column {
    Column { name, quantity }
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    /// Float, written in shortest round-trip form.
    F(f64),
    /// Integer.
    I(i64),
    /// Text.
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => fmt_f64(*x),
            Cell::I(i) => i.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::I(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::S(s.to_string())
    }
}

/// Shortest round-trip scientific notation; `NaN` and `inf` spelled out.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:e}")
    }
}

/// Render a CSV document.
pub fn csv_bytes(header: &Header, columns: &[Column], rows: &[Vec<Cell>]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    writeln!(out, "# tool: {} {}", header.tool, header.version).expect("write to Vec");
    writeln!(out, "# command: {}", header.command).expect("write to Vec");
    writeln!(out, "# config-sha256: {}", header.config_sha256).expect("write to Vec");
    for c in columns {
        writeln!(out, "# quantity: {} = {}", c.name, c.quantity).expect("write to Vec");
    }
    let mut w = csv::Writer::from_writer(out);
    let names: Vec<&str> = columns.iter().map(|c| c.name).collect();
    let encode = |e: csv::Error| CliError::usage(format!("CSV encoding failed: {e}"));
    w.write_record(&names).map_err(encode)?;
    for r in rows {
        debug_assert_eq!(r.len(), columns.len());
        w.write_record(r.iter().map(Cell::render)).map_err(encode)?;
    }
    w.into_inner().map_err(|e| CliError::usage(format!("CSV encoding failed: {e}")))
}

/// Render a JSON summary: `{"header": .., "summary": ..}` with a trailing
/// newline.
pub fn json_bytes(header: &Header, summary: Value) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(&json!({ "header": header, "summary": summary })).expect("JSON values serialize");
    v.push(b'\n');
    v
}

/// Output directory of a run.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    /// Create `root` if needed.
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self { root: root.to_path_buf() })
    }

    /// Write `bytes` to `name` inside the directory and return the path.
    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let p = self.root.join(name);
        std::fs::write(&p, bytes).map_err(|e| CliError::io(&p, e))?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_round_trip_floats() {
        let h = Header::new("volr", "ab".repeat(32));
        let cols = [col("eps", "regularization parameter"), col("v", "volume")];
        let rows = vec![vec![Cell::F(0.1), Cell::F(1.0 / 3.0)], vec![Cell::F(f64::NAN), Cell::I(3)]];
        let text = String::from_utf8(csv_bytes(&h, &cols, &rows).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# tool: hypvol "));
        assert_eq!(lines[3], "# quantity: eps = regularization parameter");
        assert_eq!(lines[5], "eps,v");
        assert_eq!(lines[6], "1e-1,3.333333333333333e-1");
        assert_eq!(lines[7], "NaN,3");
        let back: f64 = lines[6].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }

    #[test]
    fn json_summary_carries_the_header() {
        let h = Header::new("sweep", "00".into());
        let v: Value = serde_json::from_slice(&json_bytes(&h, json!({"final_gap": 1e-3}))).unwrap();
        assert_eq!(v["header"]["command"], "sweep");
        assert_eq!(v["summary"]["final_gap"], 1e-3);
    }
}
