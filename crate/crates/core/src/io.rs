//! Dense matrix file formats.
//!
//! * `.tsv`: one line per row, tab-separated decimal values.
//! * `.f32`: 8-byte header holding `rows` and `cols` as little-endian `u32`,
//!   followed by `rows * cols` little-endian `f32` values in row-major order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Tsv,
    F32,
}

impl MatrixFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") => Ok(MatrixFormat::Tsv),
            Some("f32") => Ok(MatrixFormat::F32),
            _ => Err(Error::Format {
                path: path.to_path_buf(),
                message: "matrix files must end in .tsv or .f32".into(),
            }),
        }
    }
}

/// Reads a dense matrix, picking the format from the file extension.
pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    match MatrixFormat::from_path(path)? {
        MatrixFormat::Tsv => read_tsv(path),
        MatrixFormat::F32 => read_f32(path),
    }
}

/// Writes a dense matrix, picking the format from the file extension.
pub fn write_matrix(path: &Path, m: &DenseMatrix) -> Result<()> {
    match MatrixFormat::from_path(path)? {
        MatrixFormat::Tsv => write_tsv(path, m),
        MatrixFormat::F32 => write_f32(path, m),
    }
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

pub fn read_tsv(path: &Path) -> Result<DenseMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut data = Vec::new();
    let mut rows = 0;
    let mut cols = None;
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let before = data.len();
        for field in line.split('\t') {
            let v: f64 = field.trim().parse().map_err(|_| {
                format_err(path, format!("line {}: cannot parse {field:?}", lineno + 1))
            })?;
            data.push(v);
        }
        let width = data.len() - before;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(Error::Integrity {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    message: format!("row has {width} values, expected {c}"),
                })
            }
            _ => {}
        }
        rows += 1;
    }
    DenseMatrix::from_vec(rows, cols.unwrap_or(0), data)
}

pub fn write_tsv(path: &Path, m: &DenseMatrix) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join("\t")).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_f32(path: &Path) -> Result<DenseMatrix> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() < 8 {
        return Err(format_err(path, "missing 8-byte header"));
    }
    let rows = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let body = &bytes[8..];
    if body.len() != rows * cols * 4 {
        return Err(format_err(
            path,
            format!(
                "header declares {rows}x{cols} but body holds {} bytes",
                body.len()
            ),
        ));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    DenseMatrix::from_vec(rows, cols, data)
}

pub fn write_f32(path: &Path, m: &DenseMatrix) -> Result<()> {
    let (rows, cols) = (
        u32::try_from(m.rows()).map_err(|_| Error::param("too many rows for .f32"))?,
        u32::try_from(m.cols()).map_err(|_| Error::param("too many columns for .f32"))?,
    );
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut write = |b: &[u8]| w.write_all(b).map_err(|e| Error::io(path, e));
    write(&rows.to_le_bytes())?;
    write(&cols.to_le_bytes())?;
    for &v in m.as_slice() {
        write(&(v as f32).to_le_bytes())?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
