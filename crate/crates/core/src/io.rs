//! Artifact files: the field-file container, CSV tables and JSON manifests.
//!
//! Field file layout (all integers and floats little-endian):
//!
//! ```text
//! KGFIELD 1\n
//! key value\n          (one line per header entry, UTF-8)
//! ...
//! end\n
//! n·n f64 values, row-major: index i·n + j holds x = coord(i), y = coord(j)
//! ```
//!
//! Required header keys are `n` and `length`; `t`, `name`, `config_hash` and
//! `kappa` are written when known. Unknown keys are preserved on reading.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::spectral_core::{Grid2D, RealField};

const MAGIC: &str = "KGFIELD 1";

/// Header entries of a field file besides the grid.
pub type FieldMeta = BTreeMap<String, String>;

pub fn write_field(path: &Path, field: &RealField, meta: &FieldMeta) -> Result<()> {
    let mut buf = Vec::with_capacity(field.data().len() * 8 + 256);
    writeln!(buf, "{MAGIC}").expect("in-memory write");
    writeln!(buf, "n {}", field.grid().n()).expect("in-memory write");
    writeln!(buf, "length {}", field.grid().length()).expect("in-memory write");
    for (k, v) in meta {
        if k == "n" || k == "length" || k.contains(char::is_whitespace) || v.contains('\n') {
            return Err(Error::InvalidParameter(format!("invalid field-file header entry {k:?}")));
        }
        writeln!(buf, "{k} {v}").expect("in-memory write");
    }
    writeln!(buf, "end").expect("in-memory write");
    for v in field.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_field(path: &Path) -> Result<(RealField, FieldMeta)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut line = String::new();
    let mut next_line = |reader: &mut BufReader<fs::File>| -> Result<String> {
        line.clear();
        reader.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        Ok(line.trim_end_matches('\n').to_string())
    };
    let bad = |msg: &str| Error::Serialization(format!("{}: {msg}", path.display()));
    if next_line(&mut reader)? != MAGIC {
        return Err(bad("not a field file"));
    }
    let mut meta = FieldMeta::new();
    loop {
        let l = next_line(&mut reader)?;
        if l == "end" {
            break;
        }
        if l.is_empty() {
            return Err(bad("truncated header"));
        }
        let (k, v) = l.split_once(' ').ok_or_else(|| bad("malformed header line"))?;
        meta.insert(k.to_string(), v.to_string());
    }
    let n: usize = meta.remove("n").and_then(|v| v.parse().ok()).ok_or_else(|| bad("missing n"))?;
    let length: f64 = meta
        .remove("length")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| bad("missing length"))?;
    let grid = Grid2D::new(n, length)?;
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    if bytes.len() != grid.len() * 8 {
        return Err(bad("payload size does not match the grid"));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((RealField::from_vec(grid, data)?, meta))
}

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Provenance stamped into every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct Stamp {
    pub config_hash: String,
    pub kappa: f64,
}

/// A CSV table with `#` comment lines carrying the stamp.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(stamp: &Stamp, columns: &[&str]) -> Self {
        let mut text = String::new();
        text.push_str(&format!("# config_hash={}\n# kappa={}\n", stamp.config_hash, stamp.kappa));
        text.push_str(&columns.join(","));
        text.push('\n');
        Csv { text }
    }

    /// Appends one row; values are written with `Display`, which is the
    /// shortest representation that reads back exactly.
    pub fn row(&mut self, cells: &[&dyn std::fmt::Display]) {
        let cells: Vec<String> = cells.iter().map(|c| c.to_string()).collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, &self.text).map_err(|e| Error::io(path, e))
    }
}

/// Writes `{"stamp": …, "body": …}` as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, stamp: &Stamp, body: &T) -> Result<()> {
    #[derive(Serialize)]
    struct Doc<'a, T> {
        config_hash: &'a str,
        kappa: f64,
        #[serde(flatten)]
        body: &'a T,
    }
    let doc = Doc { config_hash: &stamp.config_hash, kappa: stamp.kappa, body };
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Serialization(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}
