use crate::codebook::Codebook;

/// A set of rows, stored both as flags and as per-`u1` bit blocks of width
/// `2^m` (bit `u2` of block `u1` marks row `u1 * 2^m + u2`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowSet {
    m: u32,
    flags: Vec<bool>,
    blocks: Vec<u64>,
}

impl RowSet {
    /// Rows selected by `keep`; `keep.len()` must be `2^{2m}` with `m <= 6`.
    pub fn from_flags(m: u32, keep: Vec<bool>) -> Self {
        assert!(m <= 6, "row blocks are limited to 64 bits");
        let n = 1usize << m;
        assert_eq!(keep.len(), n * n);
        let blocks = keep
            .chunks_exact(n)
            .map(|blk| blk.iter().enumerate().fold(0u64, |w, (k, &f)| w | ((f as u64) << k)))
            .collect();
        RowSet { m, flags: keep, blocks }
    }

    /// Rows where column `j` of `codebook` is zero.
    pub fn complement_of_column(codebook: &dyn Codebook, j: usize) -> Self {
        let mut keep = vec![true; codebook.rows()];
        for (i, _) in codebook.column(j) {
            keep[i] = false;
        }
        Self::from_flags(codebook.m(), keep)
    }

    pub fn contains(&self, row: usize) -> bool {
        self.flags[row]
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    /// Bits of block `u1`.
    pub fn block(&self, u1: usize) -> u64 {
        self.blocks[u1]
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn indices(&self) -> Vec<usize> {
        self.flags.iter().enumerate().filter_map(|(i, &f)| f.then_some(i)).collect()
    }

    pub fn m(&self) -> u32 {
        self.m
    }
}
