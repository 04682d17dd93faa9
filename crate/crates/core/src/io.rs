//! Output files: flat complex grids with JSON sidecars, and CSV tables.
//!
//! A grid dump `<stem>.bin` holds little-endian `f64` pairs `(re, im)` in
//! row-major order (`p` slowest). The sidecar `<stem>.json` carries the shape
//! and everything needed to rebuild the axes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, Grid2};
use crate::propagators::KernelGrid;
use crate::symbols::SymbolGrid;

pub const GRID_FORMAT: &str = "f64-le-complex-interleaved";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSidecar {
    pub format: String,
    /// `[n_p, n_q]`.
    pub shape: [usize; 2],
    /// `[[p_min, p_max], [q_min, q_max]]`.
    pub extents: [[f64; 2]; 2],
    pub axes: [String; 2],
    pub kind: String,
    pub time: f64,
    pub hbar: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<[f64; 2]>,
    /// Nodes carrying NaN (masked or invalid).
    #[serde(default)]
    pub masked: usize,
}

impl GridSidecar {
    pub fn new(grid: &Grid2, kind: impl Into<String>, time: f64, hbar: f64) -> Self {
        Self {
            format: GRID_FORMAT.into(),
            shape: grid.shape(),
            extents: [[grid.p.min, grid.p.max], [grid.q.min, grid.q.max]],
            axes: ["p".into(), "q".into()],
            kind: kind.into(),
            time,
            hbar,
            anchor: None,
            masked: 0,
        }
    }

    pub fn grid(&self) -> Result<Grid2> {
        let [[pa, pb], [qa, qb]] = self.extents;
        Ok(Grid2::new(Axis::new(pa, pb, self.shape[0])?, Axis::new(qa, qb, self.shape[1])?))
    }

    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Writes `<stem>.bin` and `<stem>.json`; returns the binary path.
pub fn write_grid(stem: &Path, sidecar: &GridSidecar, values: &[Complex64]) -> Result<PathBuf> {
    if values.len() != sidecar.len() {
        return Err(Error::DimensionMismatch {
            expected: sidecar.len(),
            found: values.len(),
        });
    }
    let mut meta = sidecar.clone();
    meta.masked = values.iter().filter(|z| !(z.re.is_finite() && z.im.is_finite())).count();

    let mut bytes = Vec::with_capacity(values.len() * 16);
    for z in values {
        bytes.extend_from_slice(&z.re.to_le_bytes());
        bytes.extend_from_slice(&z.im.to_le_bytes());
    }
    let bin = with_ext(stem, "bin");
    fs::write(&bin, bytes)?;
    let mut json = serde_json::to_string_pretty(&meta)?;
    json.push('\n');
    fs::write(with_ext(stem, "json"), json)?;
    Ok(bin)
}

/// Reads a dump given either path of the pair (or the bare stem).
pub fn read_grid(path: &Path) -> Result<(GridSidecar, Vec<Complex64>)> {
    let stem = match path.extension().and_then(|e| e.to_str()) {
        Some("bin") | Some("json") => path.with_extension(""),
        _ => path.to_path_buf(),
    };
    let meta: GridSidecar = serde_json::from_slice(&fs::read(with_ext(&stem, "json"))?)?;
    if meta.format != GRID_FORMAT {
        return Err(Error::Invalid(format!("unknown grid format `{}`", meta.format)));
    }
    let bytes = fs::read(with_ext(&stem, "bin"))?;
    if bytes.len() != meta.len() * 16 {
        return Err(Error::DimensionMismatch {
            expected: meta.len() * 16,
            found: bytes.len(),
        });
    }
    let values = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    Ok((meta, values))
}

pub fn write_symbol(stem: &Path, symbol: &SymbolGrid) -> Result<PathBuf> {
    let meta = GridSidecar::new(&symbol.grid, symbol.kind.label(), symbol.time, symbol.hbar);
    write_grid(stem, &meta, &symbol.values)
}

pub fn write_kernel(stem: &Path, kernel: &KernelGrid) -> Result<PathBuf> {
    let kind = serde_json::to_value(kernel.kind)?;
    let mut meta = GridSidecar::new(&kernel.grid, kind.as_str().unwrap_or("kernel"), kernel.time, kernel.hbar);
    meta.anchor = kernel.anchor;
    write_grid(stem, &meta, &kernel.complex_values())
}

/// CSV with a header row taken from the record's field names.
pub fn write_csv<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).map_err(|e| Error::Invalid(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Invalid(format!("csv: {e}")))?;
    fs::File::create(path)?.write_all(&bytes)?;
    Ok(())
}

/// CSV for a numeric table with an explicit header.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::DimensionMismatch {
                expected: header.len(),
                found: row.len(),
            });
        }
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Invalid(format!("csv: {e}")))?;
    fs::File::create(path)?.write_all(&bytes)?;
    Ok(())
}
