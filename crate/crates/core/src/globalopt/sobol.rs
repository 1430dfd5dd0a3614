//! Unscrambled Sobol sequence (Gray-code construction, 32-bit).
//!
//! Direction numbers are the Joe-Kuo "new-joe-kuo-6.21201" values for the first
//! sixteen dimensions; the first point is the origin.

use super::GlobalOptError;

const BITS: usize = 32;

/// `(degree s, coefficient bits a, initial m_1..m_s)` for dimensions 2..=16.
const DIRECTION_TABLE: [(u32, u32, &[u32]); 15] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
];

pub const MAX_DIM: usize = DIRECTION_TABLE.len() + 1;

fn direction_numbers(dim: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim == 0 {
        for (i, vi) in v.iter_mut().enumerate() {
            *vi = 1u32 << (BITS - 1 - i);
        }
        return v;
    }
    let (s, a, m) = DIRECTION_TABLE[dim - 1];
    let s = s as usize;
    for i in 0..s {
        v[i] = m[i] << (BITS - 1 - i);
    }
    for i in s..BITS {
        v[i] = v[i - s] ^ (v[i - s] >> s);
        for k in 1..s {
            if (a >> (s - 1 - k)) & 1 == 1 {
                v[i] ^= v[i - k];
            }
        }
    }
    v
}

/// First `n` points of the `dim`-dimensional Sobol sequence in `[0, 1)^dim`.
pub fn sobol_unit(n: usize, dim: usize) -> Result<Vec<Vec<f64>>, GlobalOptError> {
    if dim == 0 || dim > MAX_DIM {
        return Err(GlobalOptError::SobolDimension { dim, max: MAX_DIM });
    }
    if n as u64 > 1u64 << BITS {
        return Err(GlobalOptError::TooManyPoints(n));
    }
    let dirs: Vec<[u32; BITS]> = (0..dim).map(direction_numbers).collect();
    let mut state = vec![0u32; dim];
    let mut out = Vec::with_capacity(n);
    let scale = 1.0 / (1u64 << BITS) as f64;
    for i in 0..n {
        if i > 0 {
            let c = (i - 1).trailing_ones() as usize;
            for (sj, dj) in state.iter_mut().zip(&dirs) {
                *sj ^= dj[c];
            }
        }
        out.push(state.iter().map(|&s| f64::from(s) * scale).collect());
    }
    Ok(out)
}
