//! File helpers shared by the commands.

use std::fs;
use std::path::Path;

use krig_core::kernels::{fmt_real, read_point_csv, DesignSet};

use crate::error::{CliError, CliResult};

/// Writes `bytes` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_points(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let file = fs::File::open(path).map_err(|e| CliError::parse(path.display(), e))?;
    read_point_csv(file).map_err(|e| CliError::parse(path.display(), e))
}

pub fn read_design(path: &Path) -> CliResult<DesignSet> {
    DesignSet::new(read_points(path)?).map_err(|e| CliError::parse(path.display(), e))
}

/// Reads a one-column CSV with header `y`.
pub fn read_observations(path: &Path) -> CliResult<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::parse(path.display(), e))?;
    let headers = rdr.headers().map_err(|e| CliError::parse(path.display(), e))?.clone();
    if headers.len() != 1 || &headers[0] != "y" {
        return Err(CliError::parse(path.display(), "expected a single column named 'y'"));
    }
    rdr.records()
        .enumerate()
        .map(|(line, rec)| {
            let rec = rec.map_err(|e| CliError::parse(path.display(), e))?;
            rec[0]
                .parse::<f64>()
                .map_err(|_| CliError::parse(path.display(), format!("data line {}: cannot parse '{}'", line + 1, &rec[0])))
        })
        .collect()
}

/// CSV with header `prefix_1..prefix_r` and one row per entry of `rows`.
pub fn rows_csv(prefix: &str, r: usize, rows: &[Vec<f64>]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record((1..=r).map(|j| format!("{prefix}_{j}")))?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt_real(*v)))?;
    }
    w.into_inner().map_err(|e| CliError::Output(e.to_string()))
}

pub fn read_rows_csv(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::parse(path.display(), e))?;
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(|e| CliError::parse(path.display(), e))?;
            rec.iter()
                .map(|s| s.parse::<f64>().map_err(|_| CliError::parse(path.display(), format!("cannot parse '{s}'"))))
                .collect()
        })
        .collect()
}

pub fn json_bytes(value: &impl serde::Serialize) -> CliResult<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}
