//! Codebooks restricted to a query node's off slots.

use super::{check_len, Codebook, RowSet, SparseMatrix};
use crate::{Complex64, Error, Result};

/// The rows of a parent codebook on which column `query` is zero, with the
/// columns that vanish there ("blind" columns, the query included) tracked.
pub struct CollapsedCodebook<'a> {
    parent: &'a dyn Codebook,
    query: usize,
    rows: RowSet,
    retained: Vec<usize>,
    blind: Vec<bool>,
    blind_count: usize,
    drop_blind: bool,
}

impl std::fmt::Debug for CollapsedCodebook<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CollapsedCodebook")
            .field("parent", &self.parent.label())
            .field("query", &self.query)
            .field("retained_rows", &self.retained.len())
            .field("blind_columns", &self.blind_count)
            .field("drop_blind", &self.drop_blind)
            .finish()
    }
}

/// Collapses `parent` for node `query`. With `drop_blind` the explicit
/// materialisations omit blind columns; products always act on the full
/// column space.
pub fn collapse_for_query(parent: &dyn Codebook, query: usize, drop_blind: bool) -> Result<CollapsedCodebook<'_>> {
    if query >= parent.cols() {
        return Err(Error::InvalidParameter(format!("query column {query} out of range 0..{}", parent.cols())));
    }
    if parent.column(query).is_empty() {
        return Err(Error::DegenerateSignature(query));
    }
    let rows = RowSet::complement_of_column(parent, query);
    let retained = rows.indices();
    let blind: Vec<bool> = (0..parent.cols()).map(|j| parent.column_is_zero_on(j, &rows)).collect();
    let blind_count = blind.iter().filter(|&&b| b).count();
    debug_assert!(blind[query]);
    Ok(CollapsedCodebook { parent, query, rows, retained, blind, blind_count, drop_blind })
}

impl<'a> CollapsedCodebook<'a> {
    pub fn parent(&self) -> &'a dyn Codebook {
        self.parent
    }

    pub fn query(&self) -> usize {
        self.query
    }

    pub fn drop_blind(&self) -> bool {
        self.drop_blind
    }

    /// Parent row indices kept, ascending.
    pub fn retained_rows(&self) -> &[usize] {
        &self.retained
    }

    pub fn row_set(&self) -> &RowSet {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.retained.len()
    }

    pub fn n_cols(&self) -> usize {
        self.parent.cols()
    }

    pub fn is_blind(&self, j: usize) -> bool {
        self.blind[j]
    }

    pub fn blind_mask(&self) -> &[bool] {
        &self.blind
    }

    pub fn blind_count(&self) -> usize {
        self.blind_count
    }

    pub fn blind_columns(&self) -> Vec<usize> {
        (0..self.blind.len()).filter(|&j| self.blind[j]).collect()
    }

    /// Parent columns present in the explicit collapsed matrix: the
    /// non-blind columns with `drop_blind`, otherwise all but the query.
    pub fn analysis_columns(&self) -> Vec<usize> {
        (0..self.blind.len()).filter(|&j| if self.drop_blind { !self.blind[j] } else { j != self.query }).collect()
    }

    /// `A^q x` for a full-length `x`, returned over the retained rows.
    pub fn forward(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let full = self.parent.forward(x)?;
        Ok(self.restrict(&full))
    }

    /// `A^q x` for a sparse `x`, returned over the retained rows.
    pub fn forward_sparse(&self, entries: &[(usize, Complex64)]) -> Vec<Complex64> {
        let mut full = vec![Complex64::new(0.0, 0.0); self.parent.rows()];
        self.parent.accumulate_columns(entries, &mut full);
        self.restrict(&full)
    }

    /// `(A^q)^* y_bar` over the full column space.
    pub fn adjoint(&self, y_bar: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.retained.len(), y_bar.len())?;
        let mut full = vec![Complex64::new(0.0, 0.0); self.parent.rows()];
        for (&i, &v) in self.retained.iter().zip(y_bar) {
            full[i] = v;
        }
        self.parent.adjoint(&full)
    }

    fn restrict(&self, full: &[Complex64]) -> Vec<Complex64> {
        self.retained.iter().map(|&i| full[i]).collect()
    }

    /// Explicit collapsed matrix over (retained rows) x (analysis columns).
    pub fn to_sparse(&self) -> SparseMatrix {
        let mut new_row = vec![usize::MAX; self.parent.rows()];
        for (k, &i) in self.retained.iter().enumerate() {
            new_row[i] = k;
        }
        SparseMatrix::from_columns(
            self.retained.len(),
            self.analysis_columns().into_iter().map(|j| {
                self.parent
                    .column(j)
                    .into_iter()
                    .filter(|&(i, _)| self.rows.contains(i))
                    .map(|(i, v)| (new_row[i], v))
                    .collect()
            }),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{apply_bernoulli_mask, build_dense_counterpart, build_sparse_kerdock, ColumnIndex};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kerdock_collapse_sizes() {
        for m in 2..=4 {
            let s = build_sparse_kerdock(m).unwrap();
            let n = 1usize << m;
            let mut rng = ChaCha8Rng::seed_from_u64(m as u64);
            for _ in 0..5 {
                let q = rng.random_range(0..s.cols());
                let c = collapse_for_query(&s, q, true).unwrap();
                assert_eq!(c.n_rows(), n * n - n);
                assert_eq!(c.blind_count(), n);
                let sp = c.to_sparse();
                assert_eq!((sp.nrows(), sp.ncols()), (n * n - n, n * n * n - n));
                // Columns on the query's b are disjoint from it; all others
                // meet it in exactly one row.
                let qb = ColumnIndex::from_flat(m, q).b;
                let kept: Vec<usize> = (0..s.cols()).filter(|&j| !c.is_blind(j)).collect();
                for (k, &j) in kept.iter().enumerate() {
                    let expect = if ColumnIndex::from_flat(m, j).b == qb { n } else { n - 1 };
                    assert_eq!(sp.column(k).0.len(), expect);
                }
            }
        }
    }

    #[test]
    fn blind_columns_share_a2_and_b_with_query() {
        let m = 4;
        let s = build_sparse_kerdock(m).unwrap();
        let q = ColumnIndex::new(3, 9, 12);
        let c = collapse_for_query(&s, q.flat(m), false).unwrap();
        let expect: Vec<usize> = (0..16).map(|a1| ColumnIndex::new(a1, 9, 12).flat(m)).collect();
        assert_eq!(c.blind_columns(), expect);
        // Without drop_blind only the query itself is omitted.
        assert_eq!(c.analysis_columns().len(), s.cols() - 1);
    }

    #[test]
    fn blind_fraction_m4() {
        let s = build_sparse_kerdock(4).unwrap();
        let c = collapse_for_query(&s, 1234, true).unwrap();
        let others_blind = c.blind_count() - 1;
        assert_eq!(others_blind, 15);
        assert_eq!(4095 / others_blind, 273);
        assert_eq!(4095 % others_blind, 0);
    }

    #[test]
    fn collapsed_products_agree_with_explicit_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = build_sparse_kerdock(3).unwrap();
        let d = build_dense_counterpart(&s).unwrap();
        let e = apply_bernoulli_mask(&d, 1, 77).unwrap();
        let parents: [&dyn Codebook; 2] = [&s, &e];
        for parent in parents {
            let c = collapse_for_query(parent, 17, false).unwrap();
            let sp = c.to_sparse().to_dense().unwrap();
            let cols = c.analysis_columns();
            let x: Vec<Complex64> = (0..parent.cols())
                .map(|j| if j == 17 { Complex64::new(0.0, 0.0) } else { Complex64::new(rng.random(), rng.random()) })
                .collect();
            let y = c.forward(&x).unwrap();
            for r in 0..c.n_rows() {
                let e: Complex64 = cols.iter().enumerate().map(|(k, &j)| x[j] * sp[(r, k)]).sum();
                assert!((y[r] - e).norm() < 1e-12);
            }
            let yb: Vec<Complex64> = (0..c.n_rows()).map(|_| Complex64::new(rng.random(), 0.3)).collect();
            let g = c.adjoint(&yb).unwrap();
            for (k, &j) in cols.iter().enumerate() {
                let e: Complex64 = (0..c.n_rows()).map(|r| yb[r] * sp[(r, k)]).sum();
                assert!((g[j] - e).norm() < 1e-12);
            }
            let sparse_y = c.forward_sparse(&[(3, Complex64::new(1.0, 0.0))]);
            let mut basis = vec![Complex64::new(0.0, 0.0); parent.cols()];
            basis[3] = Complex64::new(1.0, 0.0);
            let dense_y = c.forward(&basis).unwrap();
            for (a, b) in sparse_y.iter().zip(&dense_y) {
                assert!((a - b).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn degenerate_query_rejected() {
        let s = build_sparse_kerdock(2).unwrap();
        let d = build_dense_counterpart(&s).unwrap();
        // Find a mask/column pair with an all-zero column at r = 4, m = 2 (16 rows).
        let (e, q) = (0..200u64)
            .find_map(|seed| {
                let e = apply_bernoulli_mask(&d, 4, seed).unwrap();
                (0..e.cols()).find(|&j| e.column(j).is_empty()).map(|q| (e, q))
            })
            .expect("some column is fully erased");
        assert!(matches!(collapse_for_query(&e, q, false), Err(Error::DegenerateSignature(_))));
        assert!(collapse_for_query(&s, 64, false).is_err());
    }

    #[test]
    fn erased_blind_detection_matches_definition() {
        let s = build_sparse_kerdock(2).unwrap();
        let d = build_dense_counterpart(&s).unwrap();
        let e = apply_bernoulli_mask(&d, 3, 21).unwrap();
        let q = (0..e.cols()).find(|&j| !e.column(j).is_empty()).unwrap();
        let c = collapse_for_query(&e, q, true).unwrap();
        for j in 0..e.cols() {
            let zero = e.column(j).iter().all(|&(i, _)| !c.row_set().contains(i));
            assert_eq!(c.is_blind(j), zero);
        }
    }
}
