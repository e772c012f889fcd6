use crate::{Error, Result};

use super::Map1D;

/// Base-`n` digit shift `S`: every digit `d` of `z` becomes `(d + 1) mod n`.
///
/// Expansions are taken in terminating form, so trailing zeros become
/// trailing ones. On the `n^k` uniform cells of `[0, 1)` the map acts as a
/// permutation of the cell indices.
#[derive(Debug, Clone)]
pub struct FractalMap {
    n: usize,
    k_digits: u32,
    cells: usize,
    map: Map1D,
}

/// Largest cell count used for grid maps; cell centers stay exact in `f64`.
const MAX_CELLS: u64 = 1 << 53;

pub fn fractal_map(n: usize, k_digits: u32) -> Result<FractalMap> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("base must be at least 2, got {n}")));
    }
    if k_digits == 0 {
        return Err(Error::InvalidArgument("k_digits must be at least 1".into()));
    }
    let cells = (n as u64)
        .checked_pow(k_digits)
        .filter(|&c| c <= MAX_CELLS && usize::try_from(c).is_ok())
        .ok_or_else(|| Error::Overflow(format!("{n}^{k_digits} cells do not fit the index range")))?;
    let map = Map1D::new(format!("fractal-{n}"), (0.0, 1.0), move |z| shift_digits(n, z))
        .with_piece(0.0, 1.0, format!("digit d -> (d + 1) mod {n}"))
        .with_note("terminating expansions: trailing zeros shift to trailing ones");
    Ok(FractalMap { n, k_digits, cells: cells as usize, map })
}

impl FractalMap {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_digits(&self) -> u32 {
        self.k_digits
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn map(&self) -> &Map1D {
        &self.map
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.map.eval(z)
    }

    /// Index of the cell that cell `idx` is sent to.
    pub fn apply_cell(&self, idx: usize) -> usize {
        let (mut x, mut out, mut p) = (idx, 0, 1);
        for _ in 0..self.k_digits {
            out += ((x % self.n + 1) % self.n) * p;
            x /= self.n;
            p *= self.n;
        }
        out
    }

    pub fn permutation(&self) -> Vec<usize> {
        (0..self.cells).map(|i| self.apply_cell(i)).collect()
    }
}

/// `sum_{i=0}^{n-1} S^i(z)`, evaluated through the map.
pub fn orbit_sum(map: &FractalMap, z: f64) -> f64 {
    map.map.orbit(z, map.n).iter().sum()
}

fn shift_digits(n: usize, z: f64) -> f64 {
    let nf = n as f64;
    let mut x = z.clamp(0.0, 1.0 - f64::EPSILON);
    let mut out = 0.0;
    let mut scale = 1.0;
    // bound on the absolute error of x, amplified by n at every digit
    let mut err = f64::EPSILON;
    while err < 1e-3 {
        let y = x * nf;
        err *= nf;
        let r = y.round();
        let y = if (y - r).abs() <= 4.0 * err { r } else { y };
        let d = y.floor().clamp(0.0, nf - 1.0);
        x = (y - d).max(0.0);
        scale /= nf;
        out += ((d as usize + 1) % n) as f64 * scale;
        if x == 0.0 {
            break;
        }
    }
    // the remaining digits count as zeros, which shift to ones
    out + scale / (nf - 1.0)
}
