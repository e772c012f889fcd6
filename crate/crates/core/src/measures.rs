//! Uniform grids, the marginal density catalog and CDF/quantile tables.
//!
//! Densities are discretised with the midpoint rule: each cell receives the
//! density value at its center times the cell width, and the weight vector is
//! renormalised to total mass one. Measures that come from a physical density
//! with mass `N` (the DFT convention) are therefore stored as probabilities.

use std::f64::consts::PI;

use crate::{Error, Result};

/// Cell-centered uniform discretisation of `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    lo: f64,
    hi: f64,
    width: f64,
    centers: Vec<f64>,
}

impl Grid1D {
    pub fn new(lo: f64, hi: f64, m: usize) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidGrid(format!("non-finite bounds [{lo}, {hi}]")));
        }
        if hi <= lo {
            return Err(Error::InvalidGrid(format!("empty interval [{lo}, {hi}]")));
        }
        if m == 0 {
            return Err(Error::InvalidGrid("cell count must be positive".into()));
        }
        let width = (hi - lo) / m as f64;
        let centers = (0..m).map(|j| lo + (j as f64 + 0.5) * width).collect();
        Ok(Self { lo, hi, width, centers })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn center(&self, j: usize) -> f64 {
        self.centers[j]
    }

    /// Index of the cell containing `x`, clamped to the grid.
    pub fn cell_of(&self, x: f64) -> usize {
        let t = ((x - self.lo) / self.width).floor();
        if t <= 0.0 {
            0
        } else {
            (t as usize).min(self.len() - 1)
        }
    }

    /// Index of the cell containing `x`, or `None` outside `[lo, hi]`.
    pub fn try_cell_of(&self, x: f64) -> Option<usize> {
        if x < self.lo || x > self.hi || !x.is_finite() {
            None
        } else {
            Some(self.cell_of(x))
        }
    }
}

/// Named entries of the density catalog.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Density {
    /// Constant density on the grid interval.
    Uniform,
    /// `1/2` on `[-1, 1]`, zero elsewhere.
    HalfLebesgue,
    /// `1 + cos(pi x / L)` on `[-L, L]`, zero elsewhere.
    Cosine { half_width: f64 },
    Gaussian { mean: f64, std: f64 },
    /// Radial profile `3 r^2 / R^3` of the uniform ball of radius `R`.
    RadialUniformBall { radius: f64 },
    /// Radial profile `4 pi r^2 exp(-rate r)`.
    RadialExponential { rate: f64 },
}

impl Density {
    /// Parse a catalog id and its parameter list.
    ///
    /// | id | params | default |
    /// |---|---|---|
    /// | `uniform` | none | |
    /// | `half-lebesgue` | none | |
    /// | `cosine` | `[L]` | `L = 5` |
    /// | `gaussian` | `[mean, std]` | `[0, 1]` |
    /// | `radial-uniform-ball` | `[R]` | `R = 0.5` |
    /// | `radial-exponential` | `[rate]` | `rate = 4` |
    pub fn from_catalog(name: &str, params: &[f64]) -> Result<Self> {
        let bad = |reason: &str| Error::InvalidDensityParams {
            name: name.to_string(),
            reason: reason.to_string(),
        };
        let param = |i: usize, default: f64| params.get(i).copied().unwrap_or(default);
        let max_params = |k: usize| {
            if params.len() > k {
                Err(bad(&format!("expected at most {k} parameters, got {}", params.len())))
            } else {
                Ok(())
            }
        };
        if params.iter().any(|p| !p.is_finite()) {
            return Err(bad("non-finite parameter"));
        }
        let density = match name {
            "uniform" => {
                max_params(0)?;
                Density::Uniform
            }
            "half-lebesgue" => {
                max_params(0)?;
                Density::HalfLebesgue
            }
            "cosine" => {
                max_params(1)?;
                let half_width = param(0, 5.0);
                if half_width <= 0.0 {
                    return Err(bad("half width must be positive"));
                }
                Density::Cosine { half_width }
            }
            "gaussian" => {
                max_params(2)?;
                let std = param(1, 1.0);
                if std <= 0.0 {
                    return Err(bad("standard deviation must be positive"));
                }
                Density::Gaussian { mean: param(0, 0.0), std }
            }
            "radial-uniform-ball" => {
                max_params(1)?;
                let radius = param(0, 0.5);
                if radius <= 0.0 {
                    return Err(bad("radius must be positive"));
                }
                Density::RadialUniformBall { radius }
            }
            "radial-exponential" => {
                max_params(1)?;
                let rate = param(0, 4.0);
                if rate <= 0.0 {
                    return Err(bad("rate must be positive"));
                }
                Density::RadialExponential { rate }
            }
            other => return Err(Error::UnknownDensity(other.to_string())),
        };
        Ok(density)
    }

    /// Catalog ids accepted by [`Density::from_catalog`].
    pub const CATALOG: [&'static str; 6] = [
        "uniform",
        "half-lebesgue",
        "cosine",
        "gaussian",
        "radial-uniform-ball",
        "radial-exponential",
    ];

    /// Unnormalised density value at `x`.
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Density::Uniform => 1.0,
            Density::HalfLebesgue => {
                if (-1.0..=1.0).contains(&x) {
                    0.5
                } else {
                    0.0
                }
            }
            Density::Cosine { half_width } => {
                if x.abs() <= half_width {
                    1.0 + (PI * x / half_width).cos()
                } else {
                    0.0
                }
            }
            Density::Gaussian { mean, std } => {
                let z = (x - mean) / std;
                (-0.5 * z * z).exp() / (std * (2.0 * PI).sqrt())
            }
            Density::RadialUniformBall { radius } => {
                if (0.0..=radius).contains(&x) {
                    3.0 * x * x / radius.powi(3)
                } else {
                    0.0
                }
            }
            Density::RadialExponential { rate } => {
                if x >= 0.0 {
                    4.0 * PI * x * x * (-rate * x).exp()
                } else {
                    0.0
                }
            }
        }
    }

    /// Midpoint-rule discretisation on `grid`, renormalised to mass one.
    pub fn discretize(&self, grid: &Grid1D) -> Result<DiscreteMeasure> {
        let weights: Vec<f64> = grid.centers().iter().map(|&x| self.value(x) * grid.width()).collect();
        if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidMeasure(format!("{self:?} is negative or non-finite on the grid")));
        }
        DiscreteMeasure::new(grid.clone(), weights)
            .map_err(|_| Error::InvalidMeasure(format!("{self:?} vanishes identically on the grid")))
    }
}

/// Discretise the catalog density `name` on `grid`.
pub fn make_density(name: &str, params: &[f64], grid: &Grid1D) -> Result<DiscreteMeasure> {
    Density::from_catalog(name, params)?.discretize(grid)
}

/// Nonnegative weights on a grid with total mass one.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    grid: Grid1D,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Build a measure from raw nonnegative weights; they are renormalised.
    pub fn new(grid: Grid1D, mut weights: Vec<f64>) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} weights for a grid of {} cells",
                weights.len(),
                grid.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidMeasure(format!("weight {w} is negative or non-finite")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidMeasure("total mass is zero".into()));
        }
        for w in &mut weights {
            *w /= total;
        }
        Ok(Self { grid, weights })
    }

    pub fn uniform(grid: Grid1D) -> Self {
        let m = grid.len();
        Self { grid, weights: vec![1.0 / m as f64; m] }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// First moment on the cell centers.
    pub fn mean(&self) -> f64 {
        self.weights.iter().zip(self.grid.centers()).map(|(w, x)| w * x).sum()
    }

    /// Second moment on the cell centers.
    pub fn second_moment(&self) -> f64 {
        self.weights.iter().zip(self.grid.centers()).map(|(w, x)| w * x * x).sum()
    }

    pub fn max_cell_mass(&self) -> (usize, f64) {
        self.weights
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (j, w)| if w > best.1 { (j, w) } else { best })
    }

    pub fn cdf(&self) -> CdfTable {
        cdf_quantile(self)
    }

    /// Total variation distance `0.5 * sum |p - q|` to a measure on the same grid size.
    pub fn total_variation(&self, other: &DiscreteMeasure) -> f64 {
        total_variation(&self.weights, &other.weights)
    }
}

/// `0.5 * sum |p - q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "total variation of vectors with different lengths");
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Right-closed cumulative distribution on a grid with its left inverse.
///
/// Two views are offered. The grid view (`cdf_at`, [`CdfTable::quantile`])
/// works on cell centers and is the lower semicontinuous left inverse
/// restricted to the grid. The continuous view spreads every cell's mass
/// uniformly over the cell, which gives a piecewise-linear distribution
/// function ([`CdfTable::cdf`]) and its left inverse
/// ([`CdfTable::quantile_continuous`]); the analytic maps use this view.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfTable {
    grid: Grid1D,
    weights: Vec<f64>,
    cdf: Vec<f64>,
}

/// Build the CDF table of `measure`.
pub fn cdf_quantile(measure: &DiscreteMeasure) -> CdfTable {
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = measure
        .weights()
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect();
    // Renormalised weights can sum to 1 - ulp; pin the top and keep monotonicity.
    let last = cdf.len() - 1;
    cdf[last] = 1.0;
    for j in 0..last {
        cdf[j] = cdf[j].min(1.0);
    }
    CdfTable { grid: measure.grid().clone(), weights: measure.weights().to_vec(), cdf }
}

impl CdfTable {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.cdf
    }

    /// `F(centers[j])` with the right-closed convention.
    pub fn cdf_at(&self, j: usize) -> f64 {
        self.cdf[j]
    }

    /// Smallest grid index whose cumulative mass reaches `t` (and is positive).
    pub fn quantile_index(&self, t: f64) -> usize {
        let t = t.clamp(0.0, 1.0);
        let j = self.cdf.partition_point(|&f| f < t || f <= 0.0);
        j.min(self.cdf.len() - 1)
    }

    /// Grid left inverse: the smallest center `x` with `F(x) >= t`.
    pub fn quantile(&self, t: f64) -> f64 {
        self.grid.center(self.quantile_index(t))
    }

    /// Piecewise-linear distribution function at an arbitrary `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.grid.lo() {
            return 0.0;
        }
        if x >= self.grid.hi() {
            return 1.0;
        }
        let j = self.grid.cell_of(x);
        let before = if j == 0 { 0.0 } else { self.cdf[j - 1] };
        let left = self.grid.lo() + j as f64 * self.grid.width();
        let frac = ((x - left) / self.grid.width()).clamp(0.0, 1.0);
        (before + self.weights[j] * frac).min(1.0)
    }

    /// Left inverse of the piecewise-linear distribution function:
    /// the smallest `x` with `cdf(x) >= t`, for `t` in `(0, 1]`.
    /// `t <= 0` returns the left end of the support.
    pub fn quantile_continuous(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        let j = self.quantile_index(t);
        let before = if j == 0 { 0.0 } else { self.cdf[j - 1] };
        let left = self.grid.lo() + j as f64 * self.grid.width();
        let w = self.weights[j];
        if w <= 0.0 {
            return left;
        }
        let frac = ((t - before) / w).clamp(0.0, 1.0);
        left + frac * self.grid.width()
    }
}
