//! Matrix Market exchange format.
//!
//! Sparse matrices use the `coordinate` layout (real or complex, general or
//! symmetric); dense blocks use the `array` layout with complex entries.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use super::dense::DenseComplexBlock;
use super::sparse::{CsrMatrix, SparseMatrixComplex, SparseMatrixReal};
use crate::error::{MorError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

struct Header {
    coordinate: bool,
    field: Field,
    symmetry: Symmetry,
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> MorError {
    MorError::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn parse_header(path: &Path, line: &str) -> Result<Header> {
    let tokens: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(path, 1, "missing %%MatrixMarket matrix header"));
    }
    let coordinate = match tokens[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(parse_err(path, 1, format!("unsupported format '{other}'"))),
    };
    let field = match tokens[3].as_str() {
        "real" | "double" | "integer" => Field::Real,
        "complex" => Field::Complex,
        other => return Err(parse_err(path, 1, format!("unsupported field '{other}'"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(parse_err(path, 1, format!("unsupported symmetry '{other}'"))),
    };
    Ok(Header {
        coordinate,
        field,
        symmetry,
    })
}

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Data lines with their 1-based line numbers, comments and blanks removed.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .skip(1)
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('%'))
}

fn parse_num<T: std::str::FromStr>(path: &Path, line: usize, tok: Option<&str>) -> Result<T> {
    tok.ok_or_else(|| parse_err(path, line, "missing value"))?
        .parse()
        .map_err(|_| parse_err(path, line, "malformed number"))
}

fn read_coordinate(path: &Path) -> Result<(Header, usize, usize, Vec<(usize, usize, Complex64)>)> {
    let text = fs::read_to_string(path).map_err(|e| MorError::io(path, e))?;
    let header = parse_header(path, text.lines().next().unwrap_or(""))?;
    if !header.coordinate {
        return Err(parse_err(path, 1, "expected coordinate format"));
    }
    let mut lines = data_lines(&text);
    let (ln, size) = lines.next().ok_or_else(|| parse_err(path, 2, "missing size line"))?;
    let mut it = size.split_whitespace();
    let nrows: usize = parse_num(path, ln, it.next())?;
    let ncols: usize = parse_num(path, ln, it.next())?;
    let nnz: usize = parse_num(path, ln, it.next())?;
    let mut entries = Vec::with_capacity(nnz);
    for (ln, line) in lines {
        let mut it = line.split_whitespace();
        let i: usize = parse_num(path, ln, it.next())?;
        let j: usize = parse_num(path, ln, it.next())?;
        if i == 0 || j == 0 || i > nrows || j > ncols {
            return Err(parse_err(path, ln, format!("index ({i}, {j}) out of range")));
        }
        let re: f64 = parse_num(path, ln, it.next())?;
        let im: f64 = match header.field {
            Field::Real => 0.0,
            Field::Complex => parse_num(path, ln, it.next())?,
        };
        let v = Complex64::new(re, im);
        entries.push((i - 1, j - 1, v));
        if header.symmetry == Symmetry::Symmetric && i != j {
            entries.push((j - 1, i - 1, v));
        }
    }
    let stored = entries
        .iter()
        .filter(|(i, j, _)| header.symmetry == Symmetry::General || i >= j)
        .count();
    if stored != nnz {
        return Err(parse_err(path, 2, format!("expected {nnz} entries, found {stored}")));
    }
    Ok((header, nrows, ncols, entries))
}

pub fn read_sparse_real(path: &Path) -> Result<SparseMatrixReal> {
    let (header, nrows, ncols, entries) = read_coordinate(path)?;
    if header.field != Field::Real {
        return Err(parse_err(path, 1, "expected a real matrix"));
    }
    let entries: Vec<_> = entries.into_iter().map(|(i, j, v)| (i, j, v.re)).collect();
    CsrMatrix::from_triplets(&entries, nrows, ncols)
}

/// Reads either field type into complex storage.
pub fn read_sparse_complex(path: &Path) -> Result<SparseMatrixComplex> {
    let (_, nrows, ncols, entries) = read_coordinate(path)?;
    CsrMatrix::from_triplets(&entries, nrows, ncols)
}

pub fn format_sparse_real(a: &SparseMatrixReal) -> String {
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", a.nrows(), a.ncols(), a.nnz());
    for (i, j, v) in a.triplets() {
        let _ = writeln!(out, "{} {} {}", i + 1, j + 1, fmt_f64(v));
    }
    out
}

pub fn format_sparse_complex(a: &SparseMatrixComplex) -> String {
    let mut out = String::from("%%MatrixMarket matrix coordinate complex general\n");
    let _ = writeln!(out, "{} {} {}", a.nrows(), a.ncols(), a.nnz());
    for (i, j, v) in a.triplets() {
        let _ = writeln!(out, "{} {} {} {}", i + 1, j + 1, fmt_f64(v.re), fmt_f64(v.im));
    }
    out
}

pub fn write_sparse_real(path: &Path, a: &SparseMatrixReal) -> Result<()> {
    fs::write(path, format_sparse_real(a)).map_err(|e| MorError::io(path, e))
}

pub fn write_sparse_complex(path: &Path, a: &SparseMatrixComplex) -> Result<()> {
    fs::write(path, format_sparse_complex(a)).map_err(|e| MorError::io(path, e))
}

pub fn format_dense(a: &DenseComplexBlock) -> String {
    let mut out = String::from("%%MatrixMarket matrix array complex general\n");
    let _ = writeln!(out, "{} {}", a.nrows(), a.ncols());
    for v in a.data() {
        let _ = writeln!(out, "{} {}", fmt_f64(v.re), fmt_f64(v.im));
    }
    out
}

pub fn write_dense(path: &Path, a: &DenseComplexBlock) -> Result<()> {
    fs::write(path, format_dense(a)).map_err(|e| MorError::io(path, e))
}

pub fn read_dense(path: &Path) -> Result<DenseComplexBlock> {
    let text = fs::read_to_string(path).map_err(|e| MorError::io(path, e))?;
    let header = parse_header(path, text.lines().next().unwrap_or(""))?;
    if header.coordinate || header.symmetry != Symmetry::General {
        return Err(parse_err(path, 1, "expected general array format"));
    }
    let mut lines = data_lines(&text);
    let (ln, size) = lines.next().ok_or_else(|| parse_err(path, 2, "missing size line"))?;
    let mut it = size.split_whitespace();
    let nrows: usize = parse_num(path, ln, it.next())?;
    let ncols: usize = parse_num(path, ln, it.next())?;
    let mut data = Vec::with_capacity(nrows * ncols);
    for (ln, line) in lines {
        let mut it = line.split_whitespace();
        let re: f64 = parse_num(path, ln, it.next())?;
        let im: f64 = match header.field {
            Field::Real => 0.0,
            Field::Complex => parse_num(path, ln, it.next())?,
        };
        data.push(Complex64::new(re, im));
    }
    DenseComplexBlock::from_column_major(nrows, ncols, data)
}
