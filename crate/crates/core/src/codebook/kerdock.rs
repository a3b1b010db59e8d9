//! The sparse Kerdock matrix `S^m`.
//!
//! Entry `((u1, u2), (a1, a2, b))` is `2^{-m/2} (-1)^{u1 . a1}` when
//! `u1 P_b + u2 = a2` and zero otherwise. Only the shear table
//! `u1 P_b` is stored; products run in `O(m 2^{3m})` by combining the shear
//! with a Walsh-Hadamard transform along `a1`.

use super::{check_len, parity, wht, Codebook, ColumnIndex, RowSet, SlotIndex};
use crate::gf2::KerdockSet;
use crate::{Complex64, Error, Result};

/// Largest supported `m` for the implicit sparse Kerdock codebook.
pub const MAX_KERDOCK_M: u32 = 6;

#[derive(Clone, Debug)]
pub struct SparseKerdock {
    m: u32,
    kerdock: KerdockSet,
    /// `shear[b * n + u1] = u1 P_b`.
    shear: Vec<usize>,
    scale: f64,
}

impl SparseKerdock {
    pub fn new(m: u32) -> Result<Self> {
        if m == 0 || m > MAX_KERDOCK_M {
            return Err(Error::TooLarge { what: "sparse Kerdock codebook", m, limit: MAX_KERDOCK_M });
        }
        let kerdock = KerdockSet::new(m)?;
        let n = 1usize << m;
        let mut shear = vec![0; n * n];
        for b in 0..n {
            let p = kerdock.get(b);
            for u1 in 0..n {
                shear[b * n + u1] = p.left_mul(u1 as u64) as usize;
            }
        }
        Ok(SparseKerdock { m, kerdock, shear, scale: (n as f64).sqrt().recip() })
    }

    pub fn kerdock_set(&self) -> &KerdockSet {
        &self.kerdock
    }

    pub fn n(&self) -> usize {
        1 << self.m
    }

    /// `u1 P_b` as an m-bit value.
    #[inline]
    pub fn shear(&self, b: usize, u1: usize) -> usize {
        self.shear[b * self.n() + u1]
    }

    pub(crate) fn shear_table(&self) -> &[usize] {
        &self.shear
    }

    /// Magnitude of every nonzero entry, `2^{-m/2}`.
    pub fn entry_magnitude(&self) -> f64 {
        self.scale
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        let s = SlotIndex::from_flat(self.m, row);
        let c = ColumnIndex::from_flat(self.m, col);
        if s.u2 ^ self.shear(c.b, s.u1) != c.a2 {
            0.0
        } else if parity(s.u1 & c.a1) {
            -self.scale
        } else {
            self.scale
        }
    }

    /// `S^* y`, treating rows outside `keep` as zero when a row set is given.
    pub fn adjoint_masked(&self, y: &[Complex64], keep: Option<&RowSet>) -> Result<Vec<Complex64>> {
        check_len(self.rows(), y.len())?;
        let n = self.n();
        let n2 = n * n;
        let mut z = vec![Complex64::new(0.0, 0.0); n2 * n];
        // Gather: z[u1, a2, b] = y[u1, a2 ^ u1 P_b].
        for u1 in 0..n {
            let yrow = &y[u1 * n..(u1 + 1) * n];
            let block = keep.map(|k| k.block(u1));
            let zblk = &mut z[u1 * n2..(u1 + 1) * n2];
            for b in 0..n {
                let sh = self.shear[b * n + u1];
                for a2 in 0..n {
                    let u2 = a2 ^ sh;
                    if block.is_none_or(|bits| bits >> u2 & 1 == 1) {
                        zblk[a2 * n + b] = yrow[u2];
                    }
                }
            }
        }
        // Transform u1 -> a1 across the top m index bits.
        wht::fwht_from(&mut z, n2);
        for v in &mut z {
            *v *= self.scale;
        }
        Ok(z)
    }
}

/// Builds `S^m` for `1 <= m <= MAX_KERDOCK_M`.
pub fn build_sparse_kerdock(m: u32) -> Result<SparseKerdock> {
    SparseKerdock::new(m)
}

/// Support of column `j`: `2^m` pairs `((u1, a2 + u1 P_b), 2^{-m/2} (-1)^{u1 . a1})`.
pub fn column_support(codebook: &SparseKerdock, j: ColumnIndex) -> Vec<(SlotIndex, f64)> {
    let n = codebook.n();
    (0..n)
        .map(|u1| {
            let slot = SlotIndex::new(u1, j.a2 ^ codebook.shear(j.b, u1));
            let v = if parity(u1 & j.a1) { -codebook.scale } else { codebook.scale };
            (slot, v)
        })
        .collect()
}

impl Codebook for SparseKerdock {
    fn m(&self) -> u32 {
        self.m
    }

    fn label(&self) -> String {
        "kerdock".into()
    }

    fn column(&self, j: usize) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = column_support(self, ColumnIndex::from_flat(self.m, j))
            .into_iter()
            .map(|(s, v)| (s.flat(self.m), v))
            .collect();
        // u1 is the major row coordinate, so rows are already ascending.
        debug_assert!(out.windows(2).all(|w| w[0].0 < w[1].0));
        out.shrink_to_fit();
        out
    }

    fn forward(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.cols(), x.len())?;
        let n = self.n();
        let n2 = n * n;
        let mut z = x.to_vec();
        // z[u1, a2, b] = sum_a1 (-1)^{u1 . a1} x[a1, a2, b]
        wht::fwht_from(&mut z, n2);
        let mut y = vec![Complex64::new(0.0, 0.0); n2];
        for u1 in 0..n {
            let zblk = &z[u1 * n2..(u1 + 1) * n2];
            let yrow = &mut y[u1 * n..(u1 + 1) * n];
            for b in 0..n {
                let sh = self.shear[b * n + u1];
                for a2 in 0..n {
                    yrow[a2 ^ sh] += zblk[a2 * n + b];
                }
            }
        }
        for v in &mut y {
            *v *= self.scale;
        }
        Ok(y)
    }

    fn adjoint(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        self.adjoint_masked(y, None)
    }

    fn accumulate_columns(&self, entries: &[(usize, Complex64)], out: &mut [Complex64]) {
        let n = self.n();
        for &(j, v) in entries {
            let c = ColumnIndex::from_flat(self.m, j);
            let (pos, neg) = (v * self.scale, -v * self.scale);
            for u1 in 0..n {
                let row = u1 * n + (c.a2 ^ self.shear[c.b * n + u1]);
                out[row] += if parity(u1 & c.a1) { neg } else { pos };
            }
        }
    }

    fn column_is_zero_on(&self, j: usize, rows: &RowSet) -> bool {
        let c = ColumnIndex::from_flat(self.m, j);
        let n = self.n();
        (0..n).all(|u1| rows.block(u1) >> (c.a2 ^ self.shear[c.b * n + u1]) & 1 == 0)
    }
}
