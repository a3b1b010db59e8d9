//! Matrix interchange formats.
//!
//! **Binary** (little endian, column-major):
//!
//! | offset | size | field                              |
//! |--------|------|------------------------------------|
//! | 0      | 4    | magic `b"NDMX"`                    |
//! | 4      | 2    | format version (1)                 |
//! | 6      | 2    | dtype (1 = f64)                    |
//! | 8      | 4    | `m` (0 when not a codebook)        |
//! | 12     | 8    | rows                               |
//! | 20     | 8    | cols                               |
//! | 28     | 8·rows·cols | entries, column by column   |
//!
//! **Triplet text**: one `row col value` line per nonzero, columns in
//! ascending order and rows ascending within a column; values use the
//! shortest round-trip decimal form.

use std::io::{BufRead, Read, Write};

use super::{Codebook, DenseMatrix, SparseMatrix};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"NDMX";
pub const VERSION: u16 = 1;
pub const DTYPE_F64: u16 = 1;
const HEADER_LEN: usize = 28;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BinaryHeader {
    pub m: u32,
    pub rows: u64,
    pub cols: u64,
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<stream>", e)
}

/// Writes a dense column-major f64 matrix.
pub fn write_binary<W: Write>(mut out: W, m: u32, matrix: &DenseMatrix) -> Result<()> {
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    header.extend_from_slice(&DTYPE_F64.to_le_bytes());
    header.extend_from_slice(&m.to_le_bytes());
    header.extend_from_slice(&(matrix.nrows() as u64).to_le_bytes());
    header.extend_from_slice(&(matrix.ncols() as u64).to_le_bytes());
    out.write_all(&header).map_err(io_err)?;
    let mut buf = Vec::with_capacity(8 * matrix.nrows());
    for col in matrix.as_array().columns() {
        buf.clear();
        for v in col {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&buf).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Writes a codebook in the binary format without materialising it first.
pub fn write_codebook_binary<W: Write>(mut out: W, codebook: &dyn Codebook) -> Result<()> {
    let (rows, cols) = (codebook.rows(), codebook.cols());
    super::matrix::check_dense_size(rows, cols)?;
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    header.extend_from_slice(&DTYPE_F64.to_le_bytes());
    header.extend_from_slice(&codebook.m().to_le_bytes());
    header.extend_from_slice(&(rows as u64).to_le_bytes());
    header.extend_from_slice(&(cols as u64).to_le_bytes());
    out.write_all(&header).map_err(io_err)?;
    let mut dense_col = vec![0.0f64; rows];
    let mut buf = Vec::with_capacity(8 * rows);
    for j in 0..cols {
        dense_col.iter_mut().for_each(|v| *v = 0.0);
        for (i, v) in codebook.column(j) {
            dense_col[i] = v;
        }
        buf.clear();
        for v in &dense_col {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&buf).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn read_binary<R: Read>(mut input: R) -> Result<(BinaryHeader, DenseMatrix)> {
    let mut header = [0u8; HEADER_LEN];
    input.read_exact(&mut header).map_err(io_err)?;
    if &header[0..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dtype = u16::from_le_bytes([header[6], header[7]]);
    if dtype != DTYPE_F64 {
        return Err(Error::Format(format!("unsupported dtype {dtype}")));
    }
    let m = u32::from_le_bytes(header[8..12].try_into().expect("4 bytes"));
    let rows = u64::from_le_bytes(header[12..20].try_into().expect("8 bytes"));
    let cols = u64::from_le_bytes(header[20..28].try_into().expect("8 bytes"));
    let (r, c) = (rows as usize, cols as usize);
    super::matrix::check_dense_size(r, c)?;
    let mut out = DenseMatrix::zeros(r, c);
    let mut buf = vec![0u8; 8 * r];
    for j in 0..c {
        input.read_exact(&mut buf).map_err(io_err)?;
        for (i, chunk) in buf.chunks_exact(8).enumerate() {
            out[(i, j)] = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        }
    }
    Ok((BinaryHeader { m, rows, cols }, out))
}

/// Writes the nonzeros of a codebook as `row col value` lines.
pub fn write_triplets<W: Write>(mut out: W, codebook: &dyn Codebook) -> Result<()> {
    for j in 0..codebook.cols() {
        for (i, v) in codebook.column(j) {
            writeln!(out, "{i} {j} {v:?}").map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)
}

/// Parses triplet text into a sparse matrix of the given shape.
pub fn read_triplets<R: BufRead>(input: R, rows: usize, cols: usize) -> Result<SparseMatrix> {
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); cols];
    for (lineno, line) in input.lines().enumerate() {
        let line = line.map_err(io_err)?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || Error::Format(format!("line {}: expected `row col value`", lineno + 1));
        let mut parts = line.split_whitespace();
        let i: usize = parts.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
        let j: usize = parts.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
        let v: f64 = parts.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
        if parts.next().is_some() || i >= rows || j >= cols {
            return Err(bad());
        }
        columns[j].push((i, v));
    }
    Ok(SparseMatrix::from_columns(rows, columns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{build_sparse_kerdock, materialize_dense, materialize_sparse};

    #[test]
    fn binary_roundtrip() {
        let s = build_sparse_kerdock(2).unwrap();
        let dense = materialize_dense(&s).unwrap();
        let mut bytes = Vec::new();
        write_codebook_binary(&mut bytes, &s).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 8 * 16 * 64);
        assert_eq!(&bytes[..4], b"NDMX");
        let mut again = Vec::new();
        write_binary(&mut again, 2, &dense).unwrap();
        assert_eq!(bytes, again);
        let (header, back) = read_binary(&bytes[..]).unwrap();
        assert_eq!(header, BinaryHeader { m: 2, rows: 16, cols: 64 });
        assert_eq!(back, dense);
    }

    #[test]
    fn binary_rejects_garbage() {
        assert!(matches!(read_binary(&b"XXXXXXXXXXXXXXXXXXXXXXXXXXXXXXXX"[..]), Err(Error::Format(_))));
        assert!(read_binary(&b"NDMX"[..]).is_err());
    }

    #[test]
    fn triplet_roundtrip() {
        let s = build_sparse_kerdock(3).unwrap();
        let mut text = Vec::new();
        write_triplets(&mut text, &s).unwrap();
        let text = String::from_utf8(text).unwrap();
        assert_eq!(text.lines().count(), 8 * 512);
        assert!(text.starts_with("0 0 0.35355339059327"));
        let back = read_triplets(text.as_bytes(), 64, 512).unwrap();
        assert_eq!(back, materialize_sparse(&s));
    }

    #[test]
    fn triplet_rejects_out_of_range() {
        assert!(read_triplets("5 0 1.0\n".as_bytes(), 4, 4).is_err());
        assert!(read_triplets("1 0\n".as_bytes(), 4, 4).is_err());
        assert!(read_triplets("# comment\n\n1 2 0.5\n".as_bytes(), 4, 4).is_ok());
    }
}
