//! Unscrambled Sobol low-discrepancy sequence.
//!
//! Points are produced in Gray-code order, which is the ordering used by the
//! reference Joe & Kuo generator. Index 0 is the origin; samplers in this crate
//! start at index 1.

use crate::sobol_table::{DIRECTION_DATA, MAX_DIMS};
use crate::{Error, Result};

const BITS: usize = 32;
const SCALE: f64 = 1.0 / 4_294_967_296.0;

#[derive(Clone, Debug)]
pub struct SobolSequence {
    directions: Vec<[u32; BITS]>,
}

impl SobolSequence {
    pub const MAX_DIMS: usize = MAX_DIMS;

    pub fn new(dims: usize) -> Result<Self> {
        if dims == 0 {
            return Err(Error::InvalidParams("Sobol dimension must be >= 1".into()));
        }
        if dims > MAX_DIMS {
            return Err(Error::DimensionLimit {
                requested: dims,
                max: MAX_DIMS,
            });
        }
        let directions = DIRECTION_DATA[..dims]
            .iter()
            .map(|&(poly, init)| direction_numbers(poly, init))
            .collect();
        Ok(Self { directions })
    }

    pub fn dims(&self) -> usize {
        self.directions.len()
    }

    /// Raw 32-bit integer coordinates of the point with the given index.
    pub fn point_bits(&self, index: u32, out: &mut [u32]) {
        let gray = index ^ (index >> 1);
        for (o, v) in out.iter_mut().zip(&self.directions) {
            let mut x = 0u32;
            let mut g = gray;
            while g != 0 {
                let k = g.trailing_zeros() as usize;
                x ^= v[k];
                g &= g - 1;
            }
            *o = x;
        }
    }

    /// Points `start .. start + n` as integers, row-major `n x dims`.
    pub fn bits_block(&self, start: u32, n: usize) -> Vec<u32> {
        let d = self.dims();
        let mut out = vec![0u32; n * d];
        if n == 0 {
            return out;
        }
        let mut state = vec![0u32; d];
        self.point_bits(start, &mut state);
        out[..d].copy_from_slice(&state);
        for row in 1..n {
            // gray(i) ^ gray(i - 1) has a single bit, at trailing_zeros(i)
            let idx = start + row as u32;
            let k = idx.trailing_zeros() as usize;
            for (s, v) in state.iter_mut().zip(&self.directions) {
                *s ^= v[k];
            }
            out[row * d..(row + 1) * d].copy_from_slice(&state);
        }
        out
    }

    /// Points `start .. start + n` in `[0, 1)`, exactly `k / 2^32`.
    pub fn block(&self, start: u32, n: usize) -> Vec<f64> {
        self.bits_block(start, n)
            .into_iter()
            .map(|b| b as f64 * SCALE)
            .collect()
    }
}

fn direction_numbers(poly: u32, init: &[u32]) -> [u32; BITS] {
    let mut m = [0u32; BITS];
    let degree = (32 - poly.leading_zeros()) as usize - 1;
    if degree == 0 {
        for (k, mk) in m.iter_mut().enumerate() {
            *mk = 1 << (BITS - 1 - k);
        }
        return m;
    }
    m[..degree].copy_from_slice(init);
    for k in degree..BITS {
        let mut next = m[k - degree] ^ (m[k - degree] << degree);
        for i in 1..degree {
            if (poly >> (degree - i)) & 1 == 1 {
                next ^= m[k - i] << i;
            }
        }
        m[k] = next;
    }
    for (k, mk) in m.iter_mut().enumerate() {
        *mk <<= BITS - 1 - k;
    }
    m
}
