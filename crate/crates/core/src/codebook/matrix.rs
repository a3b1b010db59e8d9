use ndarray::Array2;

use crate::{Error, Result};

/// Upper bound on explicitly stored dense entries (2^25, i.e. `m = 5`).
pub(crate) const MAX_DENSE_ENTRIES: usize = 1 << 25;

pub(crate) fn check_dense_size(rows: usize, cols: usize) -> Result<()> {
    if rows.saturating_mul(cols) > MAX_DENSE_ENTRIES {
        return Err(Error::InvalidParameter(format!("{rows}x{cols} is too large to store densely")));
    }
    Ok(())
}

/// Real dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    data: Array2<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { data: Array2::zeros((rows, cols)) }
    }

    pub fn from_array(data: Array2<f64>) -> Self {
        DenseMatrix { data }
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    pub fn identity(n: usize) -> Self {
        DenseMatrix { data: Array2::eye(n) }
    }

    /// Column `j` as (row, value) pairs of its nonzeros.
    pub fn column_nonzeros(&self, j: usize) -> Vec<(usize, f64)> {
        self.data.column(j).iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, &v)| (i, v)).collect()
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.data[idx]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut f64 {
        &mut self.data[idx]
    }
}

/// Real matrix in compressed sparse column form.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from per-column `(row, value)` lists; explicit zeros are dropped.
    pub fn from_columns<I>(rows: usize, columns: I) -> Self
    where
        I: IntoIterator<Item = Vec<(usize, f64)>>,
    {
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for mut col in columns {
            col.sort_unstable_by_key(|e| e.0);
            for (i, v) in col {
                assert!(i < rows, "row index out of range");
                if v != 0.0 {
                    row_idx.push(i);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        SparseMatrix { rows, col_ptr, row_idx, values }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Row indices and values of column `j`.
    pub fn column(&self, j: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.col_ptr[j], self.col_ptr[j + 1]);
        (&self.row_idx[lo..hi], &self.values[lo..hi])
    }

    /// Row-wise view: for each row, the `(column, value)` pairs.
    pub fn row_lists(&self) -> Vec<Vec<(usize, f64)>> {
        let mut out = vec![Vec::new(); self.rows];
        for j in 0..self.ncols() {
            let (ri, vs) = self.column(j);
            for (&i, &v) in ri.iter().zip(vs) {
                out[i].push((j, v));
            }
        }
        out
    }

    pub fn to_dense(&self) -> Result<DenseMatrix> {
        check_dense_size(self.rows, self.ncols())?;
        let mut out = DenseMatrix::zeros(self.rows, self.ncols());
        for j in 0..self.ncols() {
            let (ri, vs) = self.column(j);
            for (&i, &v) in ri.iter().zip(vs) {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }
}
