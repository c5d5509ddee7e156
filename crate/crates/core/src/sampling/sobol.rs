//! Sobol low-discrepancy sequence in Gray code order.
//!
//! Direction numbers are the first 40 dimensions of the Joe and Kuo
//! `new-joe-kuo-6.21201` parameter set. Points are generated by random
//! access: point `i` XORs the direction vectors selected by the bits of
//! the Gray code `i ^ (i >> 1)`, which reproduces the usual incremental
//! Gray-code sequence at any offset.

use crate::error::{Error, Result};

/// Direction number parameters per dimension, starting at dimension 2:
/// the primitive polynomial as a coefficient bitmask (including leading
/// and trailing 1) and the initial direction integers.
#[rustfmt::skip]
const JOE_KUO: [(u32, &[u32]); 39] = [
    (3, &[1]),
    (7, &[1, 3]),
    (11, &[1, 3, 1]),
    (13, &[1, 1, 1]),
    (19, &[1, 1, 3, 3]),
    (25, &[1, 3, 5, 13]),
    (37, &[1, 1, 5, 5, 17]),
    (41, &[1, 1, 5, 5, 5]),
    (47, &[1, 1, 7, 11, 19]),
    (55, &[1, 1, 5, 1, 1]),
    (59, &[1, 1, 1, 3, 11]),
    (61, &[1, 3, 5, 5, 31]),
    (67, &[1, 3, 3, 9, 7, 49]),
    (91, &[1, 1, 1, 15, 21, 21]),
    (97, &[1, 3, 1, 13, 27, 49]),
    (103, &[1, 1, 1, 15, 7, 5]),
    (109, &[1, 3, 1, 15, 13, 25]),
    (115, &[1, 1, 5, 5, 19, 61]),
    (131, &[1, 3, 7, 11, 23, 15, 103]),
    (137, &[1, 3, 7, 13, 13, 15, 69]),
    (143, &[1, 1, 3, 13, 7, 35, 63]),
    (145, &[1, 3, 5, 9, 1, 25, 53]),
    (157, &[1, 3, 1, 13, 9, 35, 107]),
    (167, &[1, 3, 1, 5, 27, 61, 31]),
    (171, &[1, 1, 5, 11, 19, 41, 61]),
    (185, &[1, 3, 5, 3, 3, 13, 69]),
    (191, &[1, 1, 7, 13, 1, 19, 1]),
    (193, &[1, 3, 7, 5, 13, 19, 59]),
    (203, &[1, 1, 3, 9, 25, 29, 41]),
    (211, &[1, 3, 5, 13, 23, 1, 55]),
    (213, &[1, 3, 7, 3, 13, 59, 17]),
    (229, &[1, 3, 1, 3, 5, 53, 69]),
    (239, &[1, 1, 5, 5, 23, 33, 13]),
    (241, &[1, 1, 7, 7, 1, 61, 123]),
    (247, &[1, 1, 7, 9, 13, 61, 49]),
    (253, &[1, 3, 3, 5, 3, 55, 33]),
    (285, &[1, 3, 1, 15, 31, 13, 49, 245]),
    (299, &[1, 3, 5, 15, 31, 59, 63, 97]),
    (301, &[1, 3, 1, 11, 11, 11, 77, 249]),
];

/// Largest supported dimension.
pub const MAX_DIMENSION: usize = JOE_KUO.len() + 1;

const BITS: usize = 32;

/// Precomputed direction vectors for a fixed dimension.
#[derive(Debug, Clone)]
pub struct SobolSequence {
    dimension: usize,
    /// `directions[j][k]`: direction vector k of coordinate j, as a
    /// fixed-point fraction with the binary point left of bit 31.
    directions: Vec<[u32; BITS]>,
}

impl SobolSequence {
    pub fn new(dimension: usize) -> Result<Self> {
        if !(1..=MAX_DIMENSION).contains(&dimension) {
            return Err(Error::UnsupportedDimension(format!(
                "sobol sequence supports dimensions 1..={MAX_DIMENSION}, got {dimension}"
            )));
        }
        let mut directions = Vec::with_capacity(dimension);
        // First coordinate: van der Corput in base 2.
        let mut first = [0u32; BITS];
        for (k, slot) in first.iter_mut().enumerate() {
            *slot = 1u32 << (BITS - 1 - k);
        }
        directions.push(first);

        for (poly, m) in JOE_KUO.iter().take(dimension - 1) {
            let s = m.len();
            let mut v = [0u32; BITS];
            for k in 0..s {
                v[k] = m[k] << (BITS - 1 - k);
            }
            for k in s..BITS {
                let mut next = v[k - s] ^ (v[k - s] >> s);
                for j in 1..s {
                    if (poly >> (s - j)) & 1 == 1 {
                        next ^= v[k - j];
                    }
                }
                v[k] = next;
            }
            directions.push(v);
        }
        Ok(Self {
            dimension,
            directions,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// The point at absolute sequence index `index` (0-based, Gray code
    /// ordered). Each coordinate lies in `[0, 1)`.
    pub fn point(&self, index: u32) -> Vec<f64> {
        let gray = index ^ (index >> 1);
        let mut out = vec![0.0; self.dimension];
        for (j, dirs) in self.directions.iter().enumerate() {
            let mut acc = 0u32;
            let mut bits = gray;
            let mut k = 0;
            while bits != 0 {
                if bits & 1 == 1 {
                    acc ^= dirs[k];
                }
                bits >>= 1;
                k += 1;
            }
            out[j] = acc as f64 / 4294967296.0;
        }
        out
    }
}
