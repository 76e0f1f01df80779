//! Artifact writers: atomic file output, series CSV, and a run manifest
//! that records a SHA-256 digest per artifact.

use sha2::{Digest, Sha256};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// Write bytes to `path` via a temporary sibling and rename, so readers
/// never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.tmp", ext.to_string_lossy()),
        None => "tmp".into(),
    });
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

pub fn sha256_hex(path: &Path) -> io::Result<String> {
    let bytes = fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

/// Render a time-first CSV: header `t,<labels...>`, one row per sample.
pub fn series_csv(times: &[f64], columns: &[(String, Vec<f64>)]) -> String {
    let mut out = String::from("t");
    for (label, _) in columns {
        out.push(',');
        out.push_str(label);
    }
    out.push('\n');
    for (i, t) in times.iter().enumerate() {
        out.push_str(&format!("{t}"));
        for (_, values) in columns {
            out.push_str(&format!(",{}", values[i]));
        }
        out.push('\n');
    }
    out
}

/// Read a series CSV back: returns (times, labeled columns).
pub fn read_series_csv(path: &Path) -> io::Result<(Vec<f64>, Vec<(String, Vec<f64>)>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "empty series file"))?;
    let labels: Vec<&str> = header.split(',').collect();
    if labels.first() != Some(&"t") {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "series file must start with a `t` column",
        ));
    }
    let mut times = Vec::new();
    let mut columns: Vec<(String, Vec<f64>)> = labels[1..]
        .iter()
        .map(|l| (l.to_string(), Vec::new()))
        .collect();
    for (row, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != labels.len() {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!(
                    "row {}: expected {} cells, got {}",
                    row + 2,
                    labels.len(),
                    cells.len()
                ),
            ));
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|_| {
                io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("row {}: `{s}` is not a number", row + 2),
                )
            })
        };
        times.push(parse(cells[0])?);
        for (col, cell) in columns.iter_mut().zip(&cells[1..]) {
            col.1.push(parse(cell)?);
        }
    }
    Ok((times, columns))
}

/// Write `run_manifest.json` in `dir`, digesting every artifact path given.
pub fn write_run_manifest(
    dir: &Path,
    artifacts: &[PathBuf],
    info: serde_json::Value,
) -> io::Result<PathBuf> {
    let mut entries = Vec::new();
    for path in artifacts {
        let meta = fs::metadata(path)?;
        entries.push(serde_json::json!({
            "file": path.file_name().and_then(|n| n.to_str()),
            "bytes": meta.len(),
            "sha256": sha256_hex(path)?,
        }));
    }
    let manifest = serde_json::json!({ "info": info, "artifacts": entries });
    let path = dir.join("run_manifest.json");
    write_atomic(
        &path,
        serde_json::to_string_pretty(&manifest)
            .expect("manifest is valid JSON")
            .as_bytes(),
    )?;
    Ok(path)
}
