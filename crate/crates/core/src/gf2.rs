//! GF(2^m) arithmetic, dense bit matrices over GF(2) and Kerdock sets.
//!
//! Field elements are `u32` values whose bit `i` is the coefficient of
//! `alpha^i` in the polynomial basis, i.e. of the basis vector `e_{i+1}`.
//! Row vectors act on matrices from the left, so `u * P` is the XOR of the
//! rows of `P` selected by the set bits of `u`.

use crate::{Error, Result};

/// Largest field degree with a configured irreducible polynomial.
pub const MAX_DEGREE: u32 = 8;

/// Fixed irreducible polynomial of degree `m`, including the leading term.
pub fn irreducible_poly(m: u32) -> Option<u32> {
    match m {
        1 => Some(0b11),          // x + 1
        2 => Some(0b111),         // x^2 + x + 1
        3 => Some(0b1011),        // x^3 + x + 1
        4 => Some(0b1_0011),      // x^4 + x + 1
        5 => Some(0b10_0101),     // x^5 + x^2 + 1
        6 => Some(0b100_0011),    // x^6 + x + 1
        7 => Some(0b1000_0011),   // x^7 + x + 1
        8 => Some(0b1_0001_1011), // x^8 + x^4 + x^3 + x + 1
        _ => None,
    }
}

/// The field GF(2^m) in a polynomial basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gf2m {
    m: u32,
    poly: u32,
}

impl Gf2m {
    pub fn new(m: u32) -> Result<Self> {
        let poly = irreducible_poly(m).ok_or(Error::UnsupportedDegree(m))?;
        Ok(Gf2m { m, poly })
    }

    pub fn degree(&self) -> u32 {
        self.m
    }

    pub fn order(&self) -> u32 {
        1 << self.m
    }

    pub fn modulus(&self) -> u32 {
        self.poly
    }

    /// Carry-less product reduced modulo the field polynomial.
    pub fn mul(&self, x: u32, y: u32) -> u32 {
        debug_assert!(x < self.order() && y < self.order());
        let mut acc: u64 = 0;
        let mut y = y as u64;
        let mut shifted = x as u64;
        while y != 0 {
            if y & 1 == 1 {
                acc ^= shifted;
            }
            shifted <<= 1;
            y >>= 1;
        }
        let m = self.m;
        let poly = self.poly as u64;
        for bit in (m..2 * m).rev() {
            if acc >> bit & 1 == 1 {
                acc ^= poly << (bit - m);
            }
        }
        acc as u32
    }

    pub fn square(&self, x: u32) -> u32 {
        self.mul(x, x)
    }

    /// Absolute trace `x + x^2 + x^4 + ... + x^(2^(m-1))`, always 0 or 1.
    pub fn trace(&self, x: u32) -> u8 {
        let mut acc = 0;
        let mut power = x;
        for _ in 0..self.m {
            acc ^= power;
            power = self.square(power);
        }
        debug_assert!(acc <= 1, "trace left the prime field");
        acc as u8
    }
}

/// Product of `x` and `y` in GF(2^m).
pub fn field_mul(x: u32, y: u32, m: u32) -> Result<u32> {
    let field = Gf2m::new(m)?;
    if x >= field.order() || y >= field.order() {
        return Err(Error::InvalidParameter(format!("field element out of range for GF(2^{m})")));
    }
    Ok(field.mul(x, y))
}

/// Trace of `x` over GF(2).
pub fn field_trace(x: u32, m: u32) -> Result<u8> {
    let field = Gf2m::new(m)?;
    if x >= field.order() {
        return Err(Error::InvalidParameter(format!("field element out of range for GF(2^{m})")));
    }
    Ok(field.trace(x))
}

/// Bit matrix over GF(2) with at most 64 columns. Bit `j` of row word `i`
/// holds entry `(i, j)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMatrix {
    cols: usize,
    rows: Vec<u64>,
}

impl std::fmt::Debug for BinaryMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BinaryMatrix {}x{}", self.nrows(), self.cols)?;
        for i in 0..self.nrows() {
            let row: String = (0..self.cols).map(|j| if self.get(i, j) { '1' } else { '0' }).collect();
            writeln!(f, "  {row}")?;
        }
        Ok(())
    }
}

impl BinaryMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(cols <= 64, "BinaryMatrix supports at most 64 columns");
        BinaryMatrix { cols, rows: vec![0; rows] }
    }

    pub fn identity(n: usize) -> Self {
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            out.rows[i] = 1 << i;
        }
        out
    }

    /// Builds a matrix from row words; bits at or above `cols` must be clear.
    pub fn from_row_words(cols: usize, rows: Vec<u64>) -> Self {
        assert!(cols <= 64, "BinaryMatrix supports at most 64 columns");
        let mask = col_mask(cols);
        assert!(rows.iter().all(|r| r & !mask == 0), "row word wider than matrix");
        BinaryMatrix { cols, rows }
    }

    /// Builds a matrix from a slice of 0/1 rows.
    pub fn from_bits(rows: &[&[u8]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let words = rows
            .iter()
            .map(|r| {
                assert_eq!(r.len(), cols, "ragged rows");
                r.iter().enumerate().fold(0u64, |w, (j, &b)| w | (((b & 1) as u64) << j))
            })
            .collect();
        Self::from_row_words(cols, words)
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i] >> j & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        assert!(j < self.cols);
        if value {
            self.rows[i] |= 1 << j;
        } else {
            self.rows[i] &= !(1 << j);
        }
    }

    pub fn row_word(&self, i: usize) -> u64 {
        self.rows[i]
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|&r| r == 0)
    }

    pub fn is_symmetric(&self) -> bool {
        self.nrows() == self.cols && (0..self.cols).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Entrywise sum over GF(2).
    pub fn xor(&self, other: &BinaryMatrix) -> BinaryMatrix {
        assert_eq!(self.nrows(), other.nrows());
        assert_eq!(self.cols, other.cols);
        BinaryMatrix { cols: self.cols, rows: self.rows.iter().zip(&other.rows).map(|(a, b)| a ^ b).collect() }
    }

    /// Row vector times matrix: XOR of the rows selected by the bits of `u`.
    pub fn left_mul(&self, u: u64) -> u64 {
        debug_assert!(self.nrows() == 64 || u >> self.nrows() == 0);
        let mut acc = 0;
        let mut bits = u;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            acc ^= self.rows[i];
            bits &= bits - 1;
        }
        acc
    }

    /// Row rank over GF(2) by Gaussian elimination.
    pub fn rank(&self) -> usize {
        let mut rows = self.rows.clone();
        let mut rank = 0;
        for col in 0..self.cols {
            let bit = 1u64 << col;
            let Some(pivot) = (rank..rows.len()).find(|&r| rows[r] & bit != 0) else {
                continue;
            };
            rows.swap(rank, pivot);
            let pivot_row = rows[rank];
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && *row & bit != 0 {
                    *row ^= pivot_row;
                }
            }
            rank += 1;
        }
        rank
    }

    /// Solves `u * self = rhs` for a square, full-rank matrix.
    pub fn solve_left(&self, rhs: u64) -> Result<u64> {
        let n = self.nrows();
        if n != self.cols {
            return Err(Error::DimensionMismatch { expected: n, actual: self.cols });
        }
        // Each working row carries the combination of original rows it came from.
        let mut work: Vec<(u64, u64)> = self.rows.iter().enumerate().map(|(i, &r)| (r, 1u64 << i)).collect();
        let mut pivots = Vec::with_capacity(n);
        for (rank, col) in (0..n).enumerate() {
            let bit = 1u64 << col;
            let Some(p) = (rank..n).find(|&r| work[r].0 & bit != 0) else {
                return Err(Error::Singular);
            };
            work.swap(rank, p);
            let (prow, pcomb) = work[rank];
            for (r, entry) in work.iter_mut().enumerate() {
                if r != rank && entry.0 & bit != 0 {
                    entry.0 ^= prow;
                    entry.1 ^= pcomb;
                }
            }
            pivots.push(col);
        }
        // After full reduction row `i` is the unit vector e_i.
        let mut u = 0;
        let mut remaining = rhs;
        while remaining != 0 {
            let col = remaining.trailing_zeros() as usize;
            u ^= work[col].1;
            remaining &= remaining - 1;
        }
        debug_assert_eq!(self.left_mul(u), rhs);
        Ok(u)
    }
}

fn col_mask(cols: usize) -> u64 {
    if cols == 64 {
        u64::MAX
    } else {
        (1u64 << cols) - 1
    }
}

/// Rank of a binary matrix over GF(2).
pub fn gf2_rank(matrix: &BinaryMatrix) -> usize {
    matrix.rank()
}

/// The unique `u` with `u * matrix = rhs`.
pub fn solve_affine(matrix: &BinaryMatrix, rhs: u64) -> Result<u64> {
    matrix.solve_left(rhs)
}

/// A Kerdock set `{P_b}` of `2^m` binary symmetric `m x m` matrices whose
/// pairwise sums are all nonsingular.
///
/// Realised as trace forms `(P_b)_{ij} = tr(beta_b e_i e_j)`, which makes the
/// family additive in `b`.
#[derive(Clone, Debug)]
pub struct KerdockSet {
    m: u32,
    matrices: Vec<BinaryMatrix>,
}

impl KerdockSet {
    pub fn new(m: u32) -> Result<Self> {
        build_kerdock_set(m)
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn get(&self, b: usize) -> &BinaryMatrix {
        &self.matrices[b]
    }

    pub fn iter(&self) -> impl Iterator<Item = &BinaryMatrix> {
        self.matrices.iter()
    }

    /// Checks every defining property. Pairwise checks are exhaustive.
    pub fn validate(&self) -> Result<()> {
        let m = self.m;
        let fail = |reason: String| Err(Error::InvalidKerdockSet { m, reason });
        let size = 1usize << m;
        if self.matrices.len() != size {
            return fail(format!("expected {size} matrices, found {}", self.matrices.len()));
        }
        if !self.matrices[0].is_zero() {
            return fail("P_0 is not the zero matrix".into());
        }
        for (b, p) in self.matrices.iter().enumerate() {
            if p.nrows() != m as usize || p.ncols() != m as usize {
                return fail(format!("P_{b} has the wrong shape"));
            }
            if !p.is_symmetric() {
                return fail(format!("P_{b} is not symmetric"));
            }
        }
        for b1 in 0..size {
            for b2 in b1 + 1..size {
                let sum = self.matrices[b1].xor(&self.matrices[b2]);
                if sum.rank() != m as usize {
                    return fail(format!("P_{b1} + P_{b2} is singular"));
                }
                if sum != self.matrices[b1 ^ b2] {
                    return fail(format!("P_{b1} + P_{b2} != P_{}", b1 ^ b2));
                }
            }
        }
        Ok(())
    }
}

/// Builds and validates the trace-form Kerdock set for GF(2^m).
pub fn build_kerdock_set(m: u32) -> Result<KerdockSet> {
    let field = Gf2m::new(m)?;
    let size = field.order();
    let mu = m as usize;
    // basis_products[i][j] = e_i * e_j, with e_i = alpha^i.
    let basis_products: Vec<Vec<u32>> = (0..mu).map(|i| (0..mu).map(|j| field.mul(1 << i, 1 << j)).collect()).collect();
    let matrices = (0..size)
        .map(|beta| {
            let rows = (0..mu)
                .map(|i| {
                    (0..mu).fold(0u64, |w, j| {
                        let t = field.trace(field.mul(beta, basis_products[i][j]));
                        w | ((t as u64) << j)
                    })
                })
                .collect();
            BinaryMatrix::from_row_words(mu, rows)
        })
        .collect();
    let set = KerdockSet { m, matrices };
    set.validate()?;
    Ok(set)
}
