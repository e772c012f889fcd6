//! Cost families for the multi-marginal problem.
//!
//! Every family is a function of `n` real coordinates. Coulomb, log and the
//! penalty term take the value `+inf` at coincident points; the solver maps
//! those to Gibbs weight exactly zero. Determinant problems are maximisations,
//! so the radial product is stored negated and every solver path minimises.

use crate::measures::{DiscreteMeasure, Grid1D};
use crate::{Error, Result};

/// Largest supported marginal count.
pub const MAX_MARGINALS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostFamily {
    /// `sum_{i<j} 1 / |x_i - x_j|^s`.
    Coulomb { s: f64 },
    /// `sum_{i<j} -log |x_i - x_j|`.
    LogRepulsive,
    /// `|x_1 + ... + x_n|^2`.
    HarmonicSum,
    /// `sum_{i<j} -|x_i - x_j|^2`.
    HarmonicPairwise,
    /// `|x_1 + ... + x_n|^2 + tau / |x_1 - x_2|`.
    PenalizedHarmonic { tau: f64 },
    /// `sum_{i<j} (x_i^2 - x_j^2)^2`.
    CarlierOscillation,
    /// `-prod_i r_i`, the negated radial determinant cost.
    DetRadialProduct,
}

impl CostFamily {
    pub fn name(&self) -> &'static str {
        match self {
            CostFamily::Coulomb { .. } => "coulomb",
            CostFamily::LogRepulsive => "log",
            CostFamily::HarmonicSum => "harmonic-sum",
            CostFamily::HarmonicPairwise => "harmonic-pairwise",
            CostFamily::PenalizedHarmonic { .. } => "penalized-harmonic",
            CostFamily::CarlierOscillation => "carlier",
            CostFamily::DetRadialProduct => "det-radial",
        }
    }

    /// Whether the cost is invariant under any permutation of its arguments.
    pub fn is_symmetric(&self) -> bool {
        !matches!(self, CostFamily::PenalizedHarmonic { .. })
    }
}

/// A cost family together with its marginal count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostSpec {
    family: CostFamily,
    n: usize,
}

/// An extended-real cost value: finite or `+inf`, never NaN.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct CostValue(f64);

impl CostValue {
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl CostSpec {
    pub fn new(family: CostFamily, n: usize) -> Result<Self> {
        if !(2..=MAX_MARGINALS).contains(&n) {
            return Err(Error::InvalidCost(format!(
                "marginal count {n} outside 2..={MAX_MARGINALS}"
            )));
        }
        match family {
            CostFamily::Coulomb { s } if !(s.is_finite() && s >= 1.0) => {
                return Err(Error::InvalidCost(format!("Coulomb exponent {s} must be >= 1")));
            }
            CostFamily::PenalizedHarmonic { tau } if !(tau.is_finite() && tau > 0.0) => {
                return Err(Error::InvalidCost(format!("penalty {tau} must be positive")));
            }
            _ => {}
        }
        Ok(Self { family, n })
    }

    pub fn coulomb(n: usize) -> Result<Self> {
        Self::new(CostFamily::Coulomb { s: 1.0 }, n)
    }

    pub fn log_repulsive(n: usize) -> Result<Self> {
        Self::new(CostFamily::LogRepulsive, n)
    }

    pub fn harmonic_sum(n: usize) -> Result<Self> {
        Self::new(CostFamily::HarmonicSum, n)
    }

    pub fn harmonic_pairwise(n: usize) -> Result<Self> {
        Self::new(CostFamily::HarmonicPairwise, n)
    }

    pub fn penalized_harmonic(n: usize, tau: f64) -> Result<Self> {
        Self::new(CostFamily::PenalizedHarmonic { tau }, n)
    }

    pub fn carlier(n: usize) -> Result<Self> {
        Self::new(CostFamily::CarlierOscillation, n)
    }

    pub fn det_radial(n: usize) -> Result<Self> {
        Self::new(CostFamily::DetRadialProduct, n)
    }

    pub fn family(&self) -> CostFamily {
        self.family
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Evaluate the cost at `points`, checking arity and domain.
    pub fn eval(&self, points: &[f64]) -> Result<CostValue> {
        if points.len() != self.n {
            return Err(Error::Arity { expected: self.n, got: points.len() });
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("cost evaluated at a non-finite point".into()));
        }
        if matches!(self.family, CostFamily::DetRadialProduct) && points.iter().any(|&r| r < 0.0) {
            return Err(Error::InvalidArgument("radial determinant cost needs nonnegative radii".into()));
        }
        Ok(CostValue(self.eval_unchecked(points)))
    }

    /// Evaluate without validation. `points.len()` must equal `n`.
    ///
    /// Symmetric families sort their arguments first, so any permutation of
    /// the same points gives a bit-identical result.
    #[inline]
    pub fn eval_unchecked(&self, points: &[f64]) -> f64 {
        debug_assert_eq!(points.len(), self.n);
        if self.family.is_symmetric() {
            let mut buf = [0.0f64; MAX_MARGINALS];
            let sorted = &mut buf[..points.len()];
            sorted.copy_from_slice(points);
            sorted.sort_unstable_by(f64::total_cmp);
            self.eval_ordered(sorted)
        } else {
            self.eval_ordered(points)
        }
    }

    #[inline]
    fn eval_ordered(&self, x: &[f64]) -> f64 {
        match self.family {
            CostFamily::HarmonicSum => {
                let s: f64 = x.iter().sum();
                s * s
            }
            CostFamily::PenalizedHarmonic { tau } => {
                let s: f64 = x.iter().sum();
                let d = (x[0] - x[1]).abs();
                if d == 0.0 {
                    f64::INFINITY
                } else {
                    s * s + tau / d
                }
            }
            CostFamily::DetRadialProduct => -x.iter().product::<f64>(),
            _ => {
                let mut total = 0.0;
                for i in 0..x.len() {
                    for j in i + 1..x.len() {
                        total += self.pair_term(i, j, x[i], x[j]);
                    }
                }
                total
            }
        }
    }

    /// Whether the cost splits as `sum_i unary(x_i) + sum_{i<j} pair(x_i, x_j)`.
    pub fn is_pairwise(&self) -> bool {
        !matches!(self.family, CostFamily::DetRadialProduct) || self.n == 2
    }

    /// Pair interaction between coordinates `i < j` in the pairwise split.
    #[inline]
    pub fn pair_term(&self, i: usize, j: usize, xi: f64, xj: f64) -> f64 {
        match self.family {
            CostFamily::Coulomb { s } => {
                let d = (xi - xj).abs();
                if d == 0.0 {
                    f64::INFINITY
                } else if s == 1.0 {
                    1.0 / d
                } else {
                    d.powf(-s)
                }
            }
            CostFamily::LogRepulsive => {
                let d = (xi - xj).abs();
                if d == 0.0 {
                    f64::INFINITY
                } else {
                    -d.ln()
                }
            }
            CostFamily::HarmonicSum => 2.0 * xi * xj,
            CostFamily::HarmonicPairwise => {
                let d = xi - xj;
                -d * d
            }
            CostFamily::PenalizedHarmonic { tau } => {
                let base = 2.0 * xi * xj;
                if i == 0 && j == 1 {
                    let d = (xi - xj).abs();
                    if d == 0.0 {
                        f64::INFINITY
                    } else {
                        base + tau / d
                    }
                } else {
                    base
                }
            }
            CostFamily::CarlierOscillation => {
                let d = xi * xi - xj * xj;
                d * d
            }
            CostFamily::DetRadialProduct => -xi * xj,
        }
    }

    /// Single-coordinate part of the pairwise split.
    #[inline]
    pub fn unary_term(&self, _i: usize, x: f64) -> f64 {
        match self.family {
            CostFamily::HarmonicSum | CostFamily::PenalizedHarmonic { .. } => x * x,
            _ => 0.0,
        }
    }
}

/// The constant `K = n * sum_i E_{mu_i}[x^2]` with
/// `sum_{i<j} -|x_i - x_j|^2 = |sum_i x_i|^2 - K` in expectation under any
/// coupling of the given marginals.
pub fn pairwise_sum_offset(marginals: &[DiscreteMeasure]) -> f64 {
    let n = marginals.len() as f64;
    n * marginals.iter().map(DiscreteMeasure::second_moment).sum::<f64>()
}

/// Largest finite `|cost|` over a coarse subsample of grid points.
///
/// `grids` holds one grid per marginal; a single grid is reused for every
/// axis. Each axis contributes evenly spaced centers (including both ends and
/// the second center, so the nearest distinct distance is represented).
pub fn cost_scale(spec: &CostSpec, grids: &[&Grid1D]) -> f64 {
    assert!(!grids.is_empty(), "cost_scale needs at least one grid");
    let n = spec.n();
    let per_axis = ((1e5f64).powf(1.0 / n as f64).floor() as usize).clamp(3, 33);
    let samples: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            let g = grids[a.min(grids.len() - 1)];
            let m = g.len();
            let mut idx: Vec<usize> = if m <= per_axis {
                (0..m).collect()
            } else {
                (0..per_axis).map(|k| k * (m - 1) / (per_axis - 1)).collect()
            };
            if m > 1 {
                idx.push(1);
            }
            idx.sort_unstable();
            idx.dedup();
            idx.into_iter().map(|j| g.center(j)).collect()
        })
        .collect();

    let mut best = 0.0f64;
    let mut pos = vec![0usize; n];
    let mut pts = vec![0.0; n];
    loop {
        for a in 0..n {
            pts[a] = samples[a][pos[a]];
        }
        let c = spec.eval_unchecked(&pts);
        if c.is_finite() {
            best = best.max(c.abs());
        }
        let mut a = n;
        loop {
            if a == 0 {
                return best;
            }
            a -= 1;
            pos[a] += 1;
            if pos[a] < samples[a].len() {
                break;
            }
            pos[a] = 0;
        }
    }
}
