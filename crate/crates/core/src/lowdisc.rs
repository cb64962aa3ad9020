//! Deterministic low-discrepancy sequences for sampling.

pub const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Van der Corput radical inverse of `i` in `base`.
pub fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    r
}

/// Halton point `i` in `dim` dimensions, shifted modulo 1 by `shift`
/// (Cranley-Patterson rotation; pass zeros for the plain sequence).
pub fn halton(i: u64, dim: usize, shift: &[f64]) -> Vec<f64> {
    (0..dim)
        .map(|d| {
            let v = radical_inverse(i + 1, PRIMES[d % PRIMES.len()]) + shift.get(d).copied().unwrap_or(0.0);
            v.fract()
        })
        .collect()
}
