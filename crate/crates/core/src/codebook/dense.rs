//! Dense `+-2^{-m}` counterpart of `S^m` and its Bernoulli-erased baseline.
//!
//! The counterpart is `D^m = (I (x) H) S^m`, with `H` the normalised
//! `2^m`-point Walsh-Hadamard matrix acting on the `u2` coordinate:
//!
//! ```text
//! D_{(u1,w),(a1,a2,b)} = 2^{-m} (-1)^{u1.a1 + (a2 + u1 P_b).w}
//! ```
//!
//! `I (x) H` is orthogonal, so `D^m` has exactly the Gram matrix of `S^m`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_len, parity, wht, Codebook, ColumnIndex, RowSet, SlotIndex, SparseKerdock};
use crate::{Complex64, Error, Result};

/// Largest `m` for which dense counterparts and masks are built.
pub const MAX_DENSE_M: u32 = 5;

/// Largest supported erasure exponent.
pub const MAX_ERASURE_EXPONENT: u32 = 4;

/// `D^m`, generated on demand from the shear table of `S^m`.
#[derive(Clone, Debug)]
pub struct DenseCounterpart {
    sparse: SparseKerdock,
    scale: f64,
}

/// Builds `D^m` from `S^m`; fails beyond [`MAX_DENSE_M`].
pub fn build_dense_counterpart(sparse: &SparseKerdock) -> Result<DenseCounterpart> {
    let m = sparse.m();
    if m > MAX_DENSE_M {
        return Err(Error::TooLarge { what: "dense counterpart", m, limit: MAX_DENSE_M });
    }
    Ok(DenseCounterpart { sparse: sparse.clone(), scale: ((1u64 << m) as f64).recip() })
}

impl DenseCounterpart {
    pub fn sparse(&self) -> &SparseKerdock {
        &self.sparse
    }

    fn n(&self) -> usize {
        1 << self.m()
    }

    /// Entry magnitude `2^{-m}`.
    pub fn entry_magnitude(&self) -> f64 {
        self.scale
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        let s = SlotIndex::from_flat(self.m(), row);
        let c = ColumnIndex::from_flat(self.m(), col);
        let chirp = c.a2 ^ self.sparse.shear(c.b, s.u1);
        if parity(s.u1 & c.a1) ^ parity(chirp & s.u2) {
            -self.scale
        } else {
            self.scale
        }
    }

    /// Applies the normalised Walsh-Hadamard transform to each `u1` block.
    fn blockwise_hadamard(&self, v: &mut [Complex64]) {
        let n = self.n();
        let norm = (n as f64).sqrt().recip();
        for blk in v.chunks_exact_mut(n) {
            wht::fwht(blk);
            for x in blk.iter_mut() {
                *x *= norm;
            }
        }
    }
}

impl Codebook for DenseCounterpart {
    fn m(&self) -> u32 {
        self.sparse.m()
    }

    fn label(&self) -> String {
        "dense".into()
    }

    fn column(&self, j: usize) -> Vec<(usize, f64)> {
        (0..self.rows()).map(|i| (i, self.entry(i, j))).collect()
    }

    fn forward(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut y = self.sparse.forward(x)?;
        self.blockwise_hadamard(&mut y);
        Ok(y)
    }

    fn adjoint(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.rows(), y.len())?;
        let mut t = y.to_vec();
        self.blockwise_hadamard(&mut t);
        self.sparse.adjoint(&t)
    }
}

/// `D^m` multiplied pointwise by an i.i.d. Bernoulli(`2^{-r}`) mask.
///
/// The mask is stored as one word per `(u1, column)` pair: bit `w` of
/// `mask[u1 * N + j]` keeps row `(u1, w)` of column `j`.
#[derive(Clone, Debug)]
pub struct ErasedDenseCodebook {
    m: u32,
    r: u32,
    seed: u64,
    shear: Vec<usize>,
    mask: Vec<u64>,
    scale: f64,
}

/// Draws a Bernoulli mask with keep probability `2^{-r}` for `r` in `0..=4`
/// (`r = 0` keeps everything) and applies it to `dense`.
pub fn apply_bernoulli_mask(dense: &DenseCounterpart, r: u32, seed: u64) -> Result<ErasedDenseCodebook> {
    if r > MAX_ERASURE_EXPONENT {
        return Err(Error::InvalidParameter(format!("erasure exponent r = {r} outside 0..={MAX_ERASURE_EXPONENT}")));
    }
    let m = dense.m();
    let n = 1usize << m;
    let cols = n * n * n;
    let word_mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask = (0..n * cols).map(|_| (0..r).fold(word_mask, |w, _| w & rng.next_u64())).collect();
    Ok(ErasedDenseCodebook { m, r, seed, shear: dense.sparse.shear_table().to_vec(), mask, scale: dense.scale })
}

impl ErasedDenseCodebook {
    pub fn erasure_exponent(&self) -> u32 {
        self.r
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn keep_probability(&self) -> f64 {
        (-(self.r as f64)).exp2()
    }

    fn n(&self) -> usize {
        1 << self.m
    }

    /// Whether entry `(row, col)` survived the mask.
    pub fn is_kept(&self, row: usize, col: usize) -> bool {
        let s = SlotIndex::from_flat(self.m, row);
        self.mask[s.u1 * self.cols() + col] >> s.u2 & 1 == 1
    }

    pub fn column_nnz(&self, j: usize) -> usize {
        let cols = self.cols();
        (0..self.n()).map(|u1| self.mask[u1 * cols + j].count_ones() as usize).sum()
    }

    #[inline]
    fn signed(&self, row_u1: usize, w: usize, c: ColumnIndex) -> bool {
        let chirp = c.a2 ^ self.shear[c.b * self.n() + row_u1];
        parity(row_u1 & c.a1) ^ parity(chirp & w)
    }
}

impl Codebook for ErasedDenseCodebook {
    fn m(&self) -> u32 {
        self.m
    }

    fn label(&self) -> String {
        format!("dg-erased(r={})", self.r)
    }

    fn column(&self, j: usize) -> Vec<(usize, f64)> {
        let (n, cols) = (self.n(), self.cols());
        let c = ColumnIndex::from_flat(self.m, j);
        let mut out = Vec::new();
        for u1 in 0..n {
            let mut word = self.mask[u1 * cols + j];
            while word != 0 {
                let w = word.trailing_zeros() as usize;
                word &= word - 1;
                let v = if self.signed(u1, w, c) { -self.scale } else { self.scale };
                out.push((u1 * n + w, v));
            }
        }
        out
    }

    fn forward(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.cols(), x.len())?;
        let entries: Vec<(usize, Complex64)> =
            x.iter().enumerate().filter(|(_, v)| **v != Complex64::new(0.0, 0.0)).map(|(j, &v)| (j, v)).collect();
        let mut y = vec![Complex64::new(0.0, 0.0); self.rows()];
        self.accumulate_columns(&entries, &mut y);
        Ok(y)
    }

    /// Per `u1` block, tabulates signed partial sums of `y` over every
    /// 8-row chunk pattern, then reads each column's masked sum with one
    /// lookup per chunk.
    fn adjoint(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.rows(), y.len())?;
        let n = self.n();
        let cols = self.cols();
        let chunk = n.min(8);
        let chunks = n / chunk;
        let tsize = 1usize << chunk;
        let zero = Complex64::new(0.0, 0.0);
        let mut x = vec![zero; cols];
        let mut table = vec![zero; n * chunks * tsize];
        for u1 in 0..n {
            let yrow = &y[u1 * n..(u1 + 1) * n];
            if yrow.iter().all(|v| *v == zero) {
                continue;
            }
            for c in 0..n {
                for k in 0..chunks {
                    let base = (c * chunks + k) * tsize;
                    table[base] = zero;
                    for pattern in 1..tsize {
                        let w = k * chunk + pattern.trailing_zeros() as usize;
                        let term = if parity(c & w) { -yrow[w] } else { yrow[w] };
                        table[base + pattern] = table[base + (pattern & (pattern - 1))] + term;
                    }
                }
            }
            let masks = &self.mask[u1 * cols..(u1 + 1) * cols];
            let shear_u1: Vec<usize> = (0..n).map(|b| self.shear[b * n + u1]).collect();
            for a1 in 0..n {
                let negate = parity(u1 & a1);
                for a2 in 0..n {
                    let base_j = (a1 * n + a2) * n;
                    for (b, &sh) in shear_u1.iter().enumerate() {
                        let j = base_j + b;
                        let word = masks[j];
                        if word == 0 {
                            continue;
                        }
                        let tbase = (a2 ^ sh) * chunks * tsize;
                        let mut acc = zero;
                        for k in 0..chunks {
                            acc += table[tbase + k * tsize + ((word >> (k * chunk)) as usize & (tsize - 1))];
                        }
                        if negate {
                            x[j] -= acc;
                        } else {
                            x[j] += acc;
                        }
                    }
                }
            }
        }
        for v in &mut x {
            *v *= self.scale;
        }
        Ok(x)
    }

    fn accumulate_columns(&self, entries: &[(usize, Complex64)], out: &mut [Complex64]) {
        let (n, cols) = (self.n(), self.cols());
        for &(j, v) in entries {
            let c = ColumnIndex::from_flat(self.m, j);
            let (pos, neg) = (v * self.scale, -v * self.scale);
            for u1 in 0..n {
                let mut word = self.mask[u1 * cols + j];
                while word != 0 {
                    let w = word.trailing_zeros() as usize;
                    word &= word - 1;
                    out[u1 * n + w] += if self.signed(u1, w, c) { neg } else { pos };
                }
            }
        }
    }

    fn column_is_zero_on(&self, j: usize, rows: &RowSet) -> bool {
        let cols = self.cols();
        (0..self.n()).all(|u1| self.mask[u1 * cols + j] & rows.block(u1) == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{build_sparse_kerdock, materialize_dense};
    use ndarray::Array2;
    use rand::Rng;

    fn counterpart(m: u32) -> DenseCounterpart {
        build_dense_counterpart(&build_sparse_kerdock(m).unwrap()).unwrap()
    }

    fn random_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<Complex64> {
        (0..len).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    }

    #[test]
    fn every_entry_has_magnitude_two_to_minus_m() {
        for m in 1..=3 {
            let d = materialize_dense(&counterpart(m)).unwrap();
            let mag = (-(m as f64)).exp2();
            assert!(d.as_array().iter().all(|v| (v.abs() - mag).abs() < 1e-15));
        }
    }

    #[test]
    fn counterpart_is_hadamard_rotation_of_sparse() {
        // Apply H along u2 to each column of S explicitly.
        let m = 3;
        let s = build_sparse_kerdock(m).unwrap();
        let d = counterpart(m);
        let n = 1usize << m;
        let h = |w: usize, v: usize| {
            if (w & v).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 }
        } / (n as f64).sqrt();
        for j in 0..s.cols() {
            for u1 in 0..n {
                for w in 0..n {
                    let expect: f64 = (0..n).map(|u2| h(w, u2) * s.entry(u1 * n + u2, j)).sum();
                    assert!((d.entry(u1 * n + w, j) - expect).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn counterpart_operators_match_materialised() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = counterpart(3);
        let a = materialize_dense(&d).unwrap().into_array();
        for _ in 0..5 {
            let x = random_vec(&mut rng, d.cols());
            let y = d.forward(&x).unwrap();
            let w = random_vec(&mut rng, d.rows());
            let g = d.adjoint(&w).unwrap();
            for i in 0..d.rows() {
                let e: Complex64 = (0..d.cols()).map(|j| x[j] * a[(i, j)]).sum();
                assert!((y[i] - e).norm() < 1e-12);
            }
            for j in 0..d.cols() {
                let e: Complex64 = (0..d.rows()).map(|i| w[i] * a[(i, j)]).sum();
                assert!((g[j] - e).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn too_large_counterpart_rejected() {
        let s = build_sparse_kerdock(6).unwrap();
        assert!(matches!(build_dense_counterpart(&s), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn mask_is_deterministic_per_seed() {
        let d = counterpart(3);
        let a = apply_bernoulli_mask(&d, 2, 99).unwrap();
        let b = apply_bernoulli_mask(&d, 2, 99).unwrap();
        let c = apply_bernoulli_mask(&d, 2, 100).unwrap();
        assert_eq!(a.mask, b.mask);
        assert_ne!(a.mask, c.mask);
        assert!(apply_bernoulli_mask(&d, 5, 0).is_err());
    }

    #[test]
    fn zero_exponent_keeps_the_full_counterpart() {
        let d = counterpart(2);
        let e = apply_bernoulli_mask(&d, 0, 3).unwrap();
        assert_eq!(materialize_dense(&e).unwrap(), materialize_dense(&d).unwrap());
    }

    #[test]
    fn r1_column_counts_concentrate() {
        // Binomial(256, 1/2): mean 128, sd 8.
        let e = apply_bernoulli_mask(&counterpart(4), 1, 5).unwrap();
        for j in 0..e.cols() {
            let nnz = e.column_nnz(j) as f64;
            assert!((nnz - 128.0).abs() <= 4.0 * 8.0 + 8.0, "column {j}: {nnz}");
        }
        let mean = (0..e.cols()).map(|j| e.column_nnz(j)).sum::<usize>() as f64 / e.cols() as f64;
        assert!((mean - 128.0).abs() < 4.0 * 8.0 / (e.cols() as f64).sqrt());
    }

    #[test]
    fn keep_probability_matches_exponent() {
        let d = counterpart(4);
        for r in 1..=4 {
            let e = apply_bernoulli_mask(&d, r, 17).unwrap();
            let total = (e.rows() * e.cols()) as f64;
            let kept = (0..e.cols()).map(|j| e.column_nnz(j)).sum::<usize>() as f64;
            let p = (-(r as f64)).exp2();
            let sd = (total * p * (1.0 - p)).sqrt();
            assert!((kept - total * p).abs() < 4.0 * sd, "r={r}");
            assert_eq!(e.keep_probability(), p);
        }
    }

    #[test]
    fn erased_entries_are_masked_counterpart() {
        let d = counterpart(3);
        let e = apply_bernoulli_mask(&d, 2, 8).unwrap();
        let ed = materialize_dense(&e).unwrap();
        for i in 0..e.rows() {
            for j in 0..e.cols() {
                let expect = if e.is_kept(i, j) { d.entry(i, j) } else { 0.0 };
                assert_eq!(ed[(i, j)], expect);
            }
        }
    }

    #[test]
    fn erased_operators_match_materialised() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = counterpart(3);
        for r in 0..=4 {
            let e = apply_bernoulli_mask(&d, r, 40 + r as u64).unwrap();
            let a: Array2<f64> = materialize_dense(&e).unwrap().into_array();
            let x = random_vec(&mut rng, e.cols());
            let y = e.forward(&x).unwrap();
            let w = random_vec(&mut rng, e.rows());
            let g = e.adjoint(&w).unwrap();
            for i in 0..e.rows() {
                let ex: Complex64 = (0..e.cols()).map(|j| x[j] * a[(i, j)]).sum();
                assert!((y[i] - ex).norm() < 1e-12);
            }
            for j in 0..e.cols() {
                let ex: Complex64 = (0..e.rows()).map(|i| w[i] * a[(i, j)]).sum();
                assert!((g[j] - ex).norm() < 1e-12, "r={r} j={j}");
            }
        }
    }

    #[test]
    fn erased_adjoint_small_m_uses_narrow_chunks() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = counterpart(2);
        let e = apply_bernoulli_mask(&d, 1, 4).unwrap();
        let a = materialize_dense(&e).unwrap().into_array();
        let w = random_vec(&mut rng, e.rows());
        let g = e.adjoint(&w).unwrap();
        for j in 0..e.cols() {
            let ex: Complex64 = (0..e.rows()).map(|i| w[i] * a[(i, j)]).sum();
            assert!((g[j] - ex).norm() < 1e-12);
        }
    }

    #[test]
    fn erased_adjoint_consistency_m5() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let e = apply_bernoulli_mask(&counterpart(5), 2, 1).unwrap();
        let entries: Vec<(usize, Complex64)> =
            (0..40).map(|_| (rng.random_range(0..e.cols()), Complex64::new(rng.random(), rng.random()))).collect();
        let mut ax = vec![Complex64::new(0.0, 0.0); e.rows()];
        e.accumulate_columns(&entries, &mut ax);
        let y = random_vec(&mut rng, e.rows());
        let aty = e.adjoint(&y).unwrap();
        let lhs: Complex64 = ax.iter().zip(&y).map(|(a, b)| a * b.conj()).sum();
        let rhs: Complex64 = entries.iter().map(|&(j, v)| v * aty[j].conj()).sum();
        assert!((lhs - rhs).norm() < 1e-10);
    }
}
