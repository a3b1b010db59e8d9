//! In-place fast Walsh-Hadamard butterflies.

use crate::Complex64;

/// Unnormalised Walsh-Hadamard transform over the index bits at or above
/// `stride` (a power of two). With `stride == 1` this is the full transform.
pub fn fwht_from(buf: &mut [Complex64], stride: usize) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two() && stride.is_power_of_two());
    let mut h = stride;
    while h < n {
        for block in buf.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// Full unnormalised transform.
pub fn fwht(buf: &mut [Complex64]) {
    fwht_from(buf, 1);
}
