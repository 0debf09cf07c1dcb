//! Dataset files.
//!
//! CSV holds one data point per line as `d` comma-separated numbers with no
//! header. The binary format is the magic `VRPC`, `d` and `n` as
//! little-endian `u32`, then the `n·d` values as little-endian `f64`,
//! column after column.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use vrpca::DataMatrix;

use crate::error::{HarnessError, Result};

pub const MAGIC: &[u8; 4] = b"VRPC";
const HEADER_LEN: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Csv,
    F64le,
}

impl DatasetFormat {
    /// `.csv` is CSV; anything else is the binary format.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => DatasetFormat::Csv,
            _ => DatasetFormat::F64le,
        }
    }
}

pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<DataMatrix> {
    match format {
        DatasetFormat::Csv => load_csv(path),
        DatasetFormat::F64le => {
            let bytes = fs::read(path).map_err(|e| HarnessError::io(path, e))?;
            parse_binary(path, &bytes)
        }
    }
}

pub fn save_dataset(x: &DataMatrix, path: &Path, format: DatasetFormat) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<fs::File>| -> std::io::Result<()> {
        match format {
            DatasetFormat::Csv => {
                for i in 0..x.len() {
                    let line: Vec<String> = x.column(i).iter().map(|v| format!("{v:?}")).collect();
                    writeln!(out, "{}", line.join(","))?;
                }
            }
            DatasetFormat::F64le => {
                out.write_all(MAGIC)?;
                out.write_all(&(x.dim() as u32).to_le_bytes())?;
                out.write_all(&(x.len() as u32).to_le_bytes())?;
                for v in x.as_matrix().as_slice() {
                    out.write_all(&v.to_le_bytes())?;
                }
            }
        }
        out.flush()
    };
    write(&mut out).map_err(|e| HarnessError::io(path, e))
}

fn parse_error(path: &Path, line: Option<u64>, offset: Option<u64>, message: impl Into<String>) -> HarnessError {
    HarnessError::Parse {
        path: path.to_path_buf(),
        line,
        offset,
        message: message.into(),
    }
}

fn load_csv(path: &Path) -> Result<DataMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => HarnessError::io(path, io),
            other => parse_error(path, None, None, format!("{other:?}")),
        })?;
    let mut values = Vec::new();
    let mut d = None;
    let mut n = 0usize;
    let mut record = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                let line = e.position().map(|p| p.line());
                let message = match e.kind() {
                    csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
                        format!("ragged row: expected {expected_len} values, found {len}")
                    }
                    _ => e.to_string(),
                };
                return Err(parse_error(path, line, None, message));
            }
        }
        let line = record.position().map(|p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match d {
            None => d = Some(record.len()),
            Some(d) if d != record.len() => {
                return Err(parse_error(
                    path,
                    line,
                    None,
                    format!("ragged row: expected {d} values, found {}", record.len()),
                ))
            }
            _ => {}
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_error(path, line, None, format!("field {}: cannot parse {field:?}", j + 1)))?;
            if !v.is_finite() {
                return Err(parse_error(
                    path,
                    line,
                    None,
                    format!("field {}: non-finite value {field}", j + 1),
                ));
            }
            values.push(v);
        }
        n += 1;
    }
    let d = d.ok_or_else(|| parse_error(path, None, None, "no data rows"))?;
    Ok(DataMatrix::from_column_major(d, n, values)?)
}

/// Parses the binary format from memory.
pub fn parse_binary(path: &Path, bytes: &[u8]) -> Result<DataMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(parse_error(path, None, Some(bytes.len() as u64), "truncated header"));
    }
    if &bytes[..4] != MAGIC {
        return Err(parse_error(
            path,
            None,
            Some(0),
            format!("bad magic {:?}, expected \"VRPC\"", &bytes[..4]),
        ));
    }
    let d = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = d
        .checked_mul(n)
        .and_then(|c| c.checked_mul(8))
        .and_then(|c| c.checked_add(HEADER_LEN))
        .ok_or_else(|| parse_error(path, None, Some(4), format!("header size {d}x{n} overflows")))?;
    if bytes.len() != expected {
        return Err(parse_error(
            path,
            None,
            Some(bytes.len().min(expected) as u64),
            format!("expected {expected} bytes for a {d}x{n} matrix, found {}", bytes.len()),
        ));
    }
    let mut values = Vec::with_capacity(d * n);
    for (i, chunk) in bytes[HEADER_LEN..].chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            let offset = (HEADER_LEN + 8 * i) as u64;
            return Err(parse_error(path, None, Some(offset), format!("non-finite value {v}")));
        }
        values.push(v);
    }
    Ok(DataMatrix::from_column_major(d, n, values)?)
}
