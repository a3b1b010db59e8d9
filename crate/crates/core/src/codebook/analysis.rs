//! Mutual coherence and large Gram entries.

use ndarray::s;

use super::{DenseMatrix, SparseMatrix};
use crate::{Error, Result};

/// Columns per dense Gram block.
const GRAM_BLOCK: usize = 256;

#[derive(Clone, Copy, Debug)]
pub enum MatrixView<'a> {
    Dense(&'a DenseMatrix),
    Sparse(&'a SparseMatrix),
}

impl<'a> From<&'a DenseMatrix> for MatrixView<'a> {
    fn from(m: &'a DenseMatrix) -> Self {
        MatrixView::Dense(m)
    }
}

impl<'a> From<&'a SparseMatrix> for MatrixView<'a> {
    fn from(m: &'a SparseMatrix) -> Self {
        MatrixView::Sparse(m)
    }
}

impl MatrixView<'_> {
    fn ncols(&self) -> usize {
        match self {
            MatrixView::Dense(d) => d.ncols(),
            MatrixView::Sparse(s) => s.ncols(),
        }
    }

    fn column_norms(&self) -> Vec<f64> {
        match self {
            MatrixView::Dense(d) => d.as_array().columns().into_iter().map(|c| c.dot(&c).sqrt()).collect(),
            MatrixView::Sparse(s) => {
                (0..s.ncols()).map(|j| s.column(j).1.iter().map(|v| v * v).sum::<f64>().sqrt()).collect()
            }
        }
    }
}

/// Off-diagonal normalised Gram entry `|a_i^* a_j| / (|a_i| |a_j|)`, `i < j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GramEntry {
    pub i: usize,
    pub j: usize,
    pub magnitude: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GramReport {
    pub threshold: f64,
    pub coherence: f64,
    /// Entries strictly above `threshold`, sorted by `(i, j)`.
    pub entries: Vec<GramEntry>,
    pub zero_columns: usize,
}

/// Visits every pair of nonzero columns `i < j` with its normalised magnitude.
fn scan_pairs(
    view: MatrixView<'_>,
    skip_zero_columns: bool,
    mut visit: impl FnMut(usize, usize, f64),
) -> Result<usize> {
    let norms = view.column_norms();
    let zero = norms.iter().filter(|&&v| v == 0.0).count();
    if zero > 0 && !skip_zero_columns {
        return Err(Error::Coherence(format!("{zero} zero column(s)")));
    }
    if view.ncols() - zero < 2 {
        return Err(Error::Coherence("fewer than two nonzero columns".into()));
    }
    let inv: Vec<f64> = norms.iter().map(|&v| if v > 0.0 { v.recip() } else { 0.0 }).collect();
    match view {
        MatrixView::Dense(d) => {
            let a = d.as_array();
            let n = a.ncols();
            for c0 in (0..n).step_by(GRAM_BLOCK) {
                let c1 = (c0 + GRAM_BLOCK).min(n);
                let g = a.slice(s![.., ..c1]).t().dot(&a.slice(s![.., c0..c1]));
                for j in c0..c1 {
                    if inv[j] == 0.0 {
                        continue;
                    }
                    let gc = g.column(j - c0);
                    for i in 0..j {
                        if inv[i] != 0.0 {
                            visit(i, j, (gc[i].abs() * inv[i] * inv[j]).min(1.0));
                        }
                    }
                }
            }
        }
        MatrixView::Sparse(sp) => {
            let rows = sp.row_lists();
            let mut acc = vec![0.0f64; sp.ncols()];
            let mut seen = vec![false; sp.ncols()];
            let mut touched = Vec::new();
            for j in 0..sp.ncols() {
                if inv[j] == 0.0 {
                    continue;
                }
                let (ri, vs) = sp.column(j);
                for (&r, &v) in ri.iter().zip(vs) {
                    // Row lists are in ascending column order.
                    for &(i, w) in &rows[r] {
                        if i >= j {
                            break;
                        }
                        if !seen[i] {
                            seen[i] = true;
                            touched.push(i);
                        }
                        acc[i] += v * w;
                    }
                }
                touched.sort_unstable();
                for &i in &touched {
                    if inv[i] != 0.0 {
                        visit(i, j, (acc[i].abs() * inv[i] * inv[j]).min(1.0));
                    }
                    acc[i] = 0.0;
                    seen[i] = false;
                }
                touched.clear();
            }
        }
    }
    Ok(zero)
}

/// `max_{i != j} |a_i^* a_j| / (|a_i| |a_j|)`. Zero columns are an error
/// unless `skip_zero_columns` is set, in which case they are ignored.
pub fn coherence<'a>(matrix: impl Into<MatrixView<'a>>, skip_zero_columns: bool) -> Result<f64> {
    let mut mu = 0.0f64;
    scan_pairs(matrix.into(), skip_zero_columns, |_, _, v| mu = mu.max(v))?;
    Ok(mu)
}

/// Off-diagonal normalised Gram entries above `threshold`, plus the coherence.
/// Zero columns are skipped.
pub fn gram_large_entries<'a>(matrix: impl Into<MatrixView<'a>>, threshold: f64) -> Result<GramReport> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::InvalidParameter(format!("threshold {threshold} must be positive")));
    }
    let mut mu = 0.0f64;
    let mut entries = Vec::new();
    let zero_columns = scan_pairs(matrix.into(), true, |i, j, v| {
        mu = mu.max(v);
        if v > threshold {
            entries.push(GramEntry { i, j, magnitude: v });
        }
    })?;
    entries.sort_by_key(|e| (e.i, e.j));
    Ok(GramReport { threshold, coherence: mu, entries, zero_columns })
}
