//! File formats: FLD1 snapshots with JSON sidecars, versioned CSV tables,
//! atomic writes.
//!
//! FLD1 layout (little endian):
//!
//! ```text
//! b"FLD1" | u32 version = 1 | u64 nx | u64 ny | f64 lx | f64 ly | f64 time
//! | nx * ny f64 samples, row-major (y outer)
//! ```

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{RealField, SpectralGrid};
use crate::symbols::ModelParams;

pub const FLD_MAGIC: &[u8; 4] = b"FLD1";
pub const FLD_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 8 + 8 + 8 + 8;

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn encode_snapshot(field: &RealField, time: f64) -> Vec<u8> {
    let g = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * g.len());
    out.extend_from_slice(FLD_MAGIC);
    out.extend_from_slice(&FLD_VERSION.to_le_bytes());
    out.extend_from_slice(&(g.nx() as u64).to_le_bytes());
    out.extend_from_slice(&(g.ny() as u64).to_le_bytes());
    out.extend_from_slice(&g.lx().to_le_bytes());
    out.extend_from_slice(&g.ly().to_le_bytes());
    out.extend_from_slice(&time.to_le_bytes());
    for v in field.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_snapshot(bytes: &[u8], path: &Path) -> Result<(RealField, f64)> {
    let bad = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[0..4] != FLD_MAGIC {
        return Err(bad("missing FLD1 magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != FLD_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let (nx, ny) = (u64_at(8), u64_at(16));
    let (lx, ly, time) = (f64_at(24), f64_at(32), f64_at(40));
    let n = nx
        .checked_mul(ny)
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| bad("grid size overflows".into()))?;
    let expect = n
        .checked_mul(8)
        .and_then(|b| b.checked_add(HEADER_LEN))
        .ok_or_else(|| bad("grid size overflows".into()))?;
    if bytes.len() != expect {
        return Err(bad(format!("expected {expect} bytes for {nx} x {ny}, found {}", bytes.len())));
    }
    let grid = SpectralGrid::new(nx as usize, ny as usize, lx, ly).map_err(|e| bad(e.to_string()))?;
    let data = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let field = RealField::new(grid, data).map_err(|e| bad(e.to_string()))?;
    Ok((field, time))
}

/// Sidecar metadata for a snapshot, stored next to it as `<name>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotManifest {
    pub format: String,
    pub version: u32,
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub time: f64,
    pub step: Option<usize>,
    pub params: Option<ModelParams>,
    pub source: String,
    pub tool_version: String,
}

impl SnapshotManifest {
    pub fn new(field: &RealField, time: f64, step: Option<usize>, params: Option<ModelParams>, source: &str) -> Self {
        let g = field.grid();
        Self {
            format: "FLD1".into(),
            version: FLD_VERSION,
            nx: g.nx(),
            ny: g.ny(),
            lx: g.lx(),
            ly: g.ly(),
            time,
            step,
            params,
            source: source.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

pub fn manifest_path(snapshot: &Path) -> PathBuf {
    snapshot.with_extension("json")
}

/// Writes the snapshot and its sidecar manifest.
pub fn write_snapshot(path: &Path, field: &RealField, manifest: &SnapshotManifest) -> Result<()> {
    write_atomic(path, &encode_snapshot(field, manifest.time))?;
    let mut json = serde_json::to_vec_pretty(manifest)?;
    json.push(b'\n');
    write_atomic(&manifest_path(path), &json)
}

/// Reads a snapshot; the manifest is returned when present.
pub fn read_snapshot(path: &Path) -> Result<(RealField, Option<SnapshotManifest>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let (field, _) = decode_snapshot(&bytes, path)?;
    let mp = manifest_path(path);
    let manifest = if mp.exists() {
        Some(serde_json::from_slice(&std::fs::read(&mp)?)?)
    } else {
        None
    };
    Ok((field, manifest))
}

/// Reads the time stamp stored in a snapshot header.
pub fn snapshot_time(path: &Path) -> Result<f64> {
    let bytes = std::fs::read(path)?;
    Ok(decode_snapshot(&bytes, path)?.1)
}

/// In-memory CSV table with the versioned schema line
/// `# dmkp-lab v1 <kind>` followed by a header row.
#[derive(Debug, Clone)]
pub struct CsvTable {
    kind: String,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

pub const CSV_SCHEMA_PREFIX: &str = "# dmkp-lab v1";

impl CsvTable {
    pub fn new(kind: &str, columns: &[&str]) -> Self {
        Self {
            kind: kind.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "CSV row width");
        self.rows.push(row);
    }

    pub fn push_values(&mut self, row: &[f64]) {
        self.push(row.iter().map(|v| fmt_f64(*v)).collect());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{CSV_SCHEMA_PREFIX} {}", self.kind);
        let _ = writeln!(out, "{}", self.columns.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.render().as_bytes())
    }
}

/// Shortest round-trip formatting; non-finite values as `nan`, `inf`, `-inf`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}
