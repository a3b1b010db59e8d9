//! Codebooks for on-off duplex neighbour discovery.
//!
//! Every codebook here is a `2^{2m} x 2^{3m}` real matrix whose columns are
//! node signatures. Rows are symbol slots `(u1, u2)` with flat index
//! `u1 * 2^m + u2`; columns are nodes `(a1, a2, b)` with flat index
//! `a1 * 2^{2m} + a2 * 2^m + b`.

mod analysis;
mod collapse;
mod dense;
pub mod export;
mod kerdock;
mod matrix;
mod rowset;
pub(crate) mod wht;

pub use analysis::{coherence, gram_large_entries, GramEntry, GramReport, MatrixView};
pub use collapse::{collapse_for_query, CollapsedCodebook};
pub use dense::{
    apply_bernoulli_mask, build_dense_counterpart, DenseCounterpart, ErasedDenseCodebook, MAX_DENSE_M,
    MAX_ERASURE_EXPONENT,
};
pub use kerdock::{build_sparse_kerdock, column_support, SparseKerdock, MAX_KERDOCK_M};
pub use matrix::{DenseMatrix, SparseMatrix};
pub use rowset::RowSet;

use crate::{Complex64, Result};

/// Node label `(a1, a2, b)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColumnIndex {
    pub a1: usize,
    pub a2: usize,
    pub b: usize,
}

impl ColumnIndex {
    pub fn new(a1: usize, a2: usize, b: usize) -> Self {
        ColumnIndex { a1, a2, b }
    }

    pub fn flat(&self, m: u32) -> usize {
        (self.a1 << (2 * m)) | (self.a2 << m) | self.b
    }

    pub fn from_flat(m: u32, j: usize) -> Self {
        let mask = (1 << m) - 1;
        ColumnIndex { a1: j >> (2 * m), a2: (j >> m) & mask, b: j & mask }
    }
}

/// Symbol slot label `(u1, u2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SlotIndex {
    pub u1: usize,
    pub u2: usize,
}

impl SlotIndex {
    pub fn new(u1: usize, u2: usize) -> Self {
        SlotIndex { u1, u2 }
    }

    pub fn flat(&self, m: u32) -> usize {
        (self.u1 << m) | self.u2
    }

    pub fn from_flat(m: u32, i: usize) -> Self {
        SlotIndex { u1: i >> m, u2: i & ((1 << m) - 1) }
    }
}

/// A real codebook matrix with matrix-free products.
pub trait Codebook: Sync {
    /// Size parameter; the matrix is `2^{2m} x 2^{3m}`.
    fn m(&self) -> u32;

    /// Short human-readable label, e.g. `kerdock` or `dg-erased(r=2)`.
    fn label(&self) -> String;

    fn rows(&self) -> usize {
        1 << (2 * self.m())
    }

    fn cols(&self) -> usize {
        1 << (3 * self.m())
    }

    /// Nonzero entries of column `j` as `(row, value)`, rows ascending.
    fn column(&self, j: usize) -> Vec<(usize, f64)>;

    /// `A x` for `x` of length [`Codebook::cols`].
    fn forward(&self, x: &[Complex64]) -> Result<Vec<Complex64>>;

    /// `A^* y` for `y` of length [`Codebook::rows`].
    fn adjoint(&self, y: &[Complex64]) -> Result<Vec<Complex64>>;

    /// Adds `sum_j v_j a_j` into `out` (length [`Codebook::rows`]).
    fn accumulate_columns(&self, entries: &[(usize, Complex64)], out: &mut [Complex64]) {
        for &(j, v) in entries {
            for (i, a) in self.column(j) {
                out[i] += v * a;
            }
        }
    }

    /// True when column `j` vanishes on every row of `rows`.
    fn column_is_zero_on(&self, j: usize, rows: &RowSet) -> bool {
        self.column(j).iter().all(|&(i, _)| !rows.contains(i))
    }
}

/// Explicit dense copy of any codebook. Intended for small `m`.
pub fn materialize_dense(codebook: &dyn Codebook) -> Result<DenseMatrix> {
    let (rows, cols) = (codebook.rows(), codebook.cols());
    matrix::check_dense_size(rows, cols)?;
    let mut out = DenseMatrix::zeros(rows, cols);
    for j in 0..cols {
        for (i, v) in codebook.column(j) {
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

/// Explicit compressed-column copy of any codebook.
pub fn materialize_sparse(codebook: &dyn Codebook) -> SparseMatrix {
    SparseMatrix::from_columns(codebook.rows(), (0..codebook.cols()).map(|j| codebook.column(j)))
}

#[inline]
pub(crate) fn parity(x: usize) -> bool {
    x.count_ones() & 1 == 1
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(crate::Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn column_index_bijection(m in 1u32..=5, seed in any::<usize>()) {
            let j = seed % (1usize << (3 * m));
            let c = ColumnIndex::from_flat(m, j);
            prop_assert!(c.a1 < 1 << m && c.a2 < 1 << m && c.b < 1 << m);
            prop_assert_eq!(c.flat(m), j);
        }

        #[test]
        fn slot_index_bijection(m in 1u32..=5, seed in any::<usize>()) {
            let i = seed % (1usize << (2 * m));
            let s = SlotIndex::from_flat(m, i);
            prop_assert!(s.u1 < 1 << m && s.u2 < 1 << m);
            prop_assert_eq!(s.flat(m), i);
        }
    }

    #[test]
    fn flat_layout() {
        assert_eq!(ColumnIndex::new(1, 2, 3).flat(2), 16 + 8 + 3);
        assert_eq!(SlotIndex::new(3, 1).flat(2), 13);
    }
}
