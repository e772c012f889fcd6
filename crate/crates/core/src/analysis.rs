//! Diagnostics for solved couplings: pair projections, supports, cyclical
//! monotonicity and concentration on the graphs of reference maps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::costs::CostSpec;
use crate::ipfp::ScalingState;
use crate::measures::{total_variation, Grid1D};
use crate::oracles::Map1D;
use crate::{Error, Result};

/// Two-coordinate marginal of a coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct PairProjection {
    grid_row: Grid1D,
    grid_col: Grid1D,
    /// Row-major, `grid_row.len() x grid_col.len()`.
    matrix: Vec<f64>,
}

impl PairProjection {
    pub fn new(grid_row: Grid1D, grid_col: Grid1D, matrix: Vec<f64>) -> Result<Self> {
        if matrix.len() != grid_row.len() * grid_col.len() {
            return Err(Error::InvalidArgument(format!(
                "matrix has {} entries, expected {} x {}",
                matrix.len(),
                grid_row.len(),
                grid_col.len()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument("projection entries must be finite and nonnegative".into()));
        }
        Ok(Self { grid_row, grid_col, matrix })
    }

    pub fn grid_row(&self) -> &Grid1D {
        &self.grid_row
    }

    pub fn grid_col(&self) -> &Grid1D {
        &self.grid_col
    }

    pub fn rows(&self) -> usize {
        self.grid_row.len()
    }

    pub fn cols(&self) -> usize {
        self.grid_col.len()
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.matrix[a * self.cols() + b]
    }

    pub fn row(&self, a: usize) -> &[f64] {
        &self.matrix[a * self.cols()..(a + 1) * self.cols()]
    }

    pub fn total_mass(&self) -> f64 {
        self.matrix.iter().sum()
    }

    pub fn max_entry(&self) -> f64 {
        self.matrix.iter().copied().fold(0.0, f64::max)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows()).map(|a| self.row(a).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols()];
        for a in 0..self.rows() {
            for (o, v) in out.iter_mut().zip(self.row(a)) {
                *o += v;
            }
        }
        out
    }

    pub fn transpose(&self) -> PairProjection {
        let (r, c) = (self.rows(), self.cols());
        let mut t = vec![0.0; r * c];
        for a in 0..r {
            for b in 0..c {
                t[b * r + a] = self.matrix[a * c + b];
            }
        }
        PairProjection { grid_row: self.grid_col.clone(), grid_col: self.grid_row.clone(), matrix: t }
    }

    /// `0.5 * sum |p - q|` against a projection of the same shape.
    pub fn total_variation(&self, other: &PairProjection) -> Result<f64> {
        if self.rows() != other.rows() || self.cols() != other.cols() {
            return Err(Error::InvalidArgument("projections have different shapes".into()));
        }
        Ok(total_variation(&self.matrix, &other.matrix))
    }
}

/// `matrix[a][b]`: total coupling mass with `j_i = a` and `j_j = b`.
pub fn project_pair(state: &ScalingState, i: usize, j: usize) -> Result<PairProjection> {
    let n = state.n();
    if i == j || i >= n || j >= n {
        return Err(Error::InvalidArgument(format!("bad pair ({i}, {j}) for n = {n}")));
    }
    state.check_budget()?;
    let kernel = state.kernel(false);
    let u = state.log_scalings();
    let (mi, mj) = (state.marginals()[i].len(), state.marginals()[j].len());
    let rows: Vec<Vec<f64>> = (0..mi)
        .into_par_iter()
        .map(|a| {
            (0..mj)
                .map(|b| {
                    let mut mass = 0.0;
                    kernel.for_each_row(&[(i, a), (j, b)], |_, row| mass += row.iter().map(|v| v.exp()).sum::<f64>(), Some(u), None);
                    mass
                })
                .collect()
        })
        .collect();
    PairProjection::new(
        state.marginals()[i].grid().clone(),
        state.marginals()[j].grid().clone(),
        rows.into_iter().flatten().collect(),
    )
}

/// Entries kept by a relative threshold, with the grids they index.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportSet {
    pub entries: Vec<(Vec<usize>, f64)>,
    pub threshold: f64,
    pub grids: Vec<Grid1D>,
}

impl SupportSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.entries.iter().map(|(_, m)| m).sum()
    }

    pub fn points(&self, index: &[usize]) -> Vec<f64> {
        index.iter().zip(&self.grids).map(|(&j, g)| g.center(j)).collect()
    }

    /// Mean number of kept cells per occupied row, times the column width.
    pub fn mean_row_width(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        let mut rows: Vec<usize> = self.entries.iter().map(|(idx, _)| idx[0]).collect();
        rows.sort_unstable();
        rows.dedup();
        let width = self.grids.get(1).map_or(1.0, |g| g.width());
        self.entries.len() as f64 / rows.len() as f64 * width
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("eta must lie in (0, 1), got {eta}")))
    }
}

/// Entries of `projection` with mass at least `eta` times the largest entry.
pub fn threshold_support(projection: &PairProjection, eta: f64) -> Result<SupportSet> {
    check_eta(eta)?;
    let cut = eta * projection.max_entry();
    let cols = projection.cols();
    let entries = projection
        .matrix
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0 && v >= cut)
        .map(|(k, &v)| (vec![k / cols, k % cols], v))
        .collect();
    Ok(SupportSet { entries, threshold: eta, grids: vec![projection.grid_row.clone(), projection.grid_col.clone()] })
}

/// Full multi-indices of the coupling with mass at least `eta` times the
/// largest entry. Two streaming passes; memory grows with the kept entries only.
pub fn full_support(state: &ScalingState, eta: f64) -> Result<SupportSet> {
    check_eta(eta)?;
    state.check_budget()?;
    let kernel = state.kernel(false);
    let u = state.log_scalings();
    let m0 = state.marginals()[0].len();
    let scan = |cut: f64| -> Vec<(f64, Vec<(Vec<usize>, f64)>)> {
        (0..m0)
            .into_par_iter()
            .map(|j0| {
                let mut best = f64::NEG_INFINITY;
                let mut kept = Vec::new();
                kernel.for_each_row(
                    &[(0, j0)],
                    |idx, row| {
                        for (k, &v) in row.iter().enumerate() {
                            best = best.max(v);
                            if v >= cut && v > f64::NEG_INFINITY {
                                let mut full = idx.to_vec();
                                *full.last_mut().unwrap() = k;
                                kept.push((full, v.exp()));
                            }
                        }
                    },
                    Some(u),
                    None,
                );
                (best, kept)
            })
            .collect()
    };
    let max_log = scan(f64::INFINITY).iter().map(|(b, _)| *b).fold(f64::NEG_INFINITY, f64::max);
    let entries = scan(max_log + eta.ln()).into_iter().flat_map(|(_, k)| k).collect();
    Ok(SupportSet {
        entries,
        threshold: eta,
        grids: state.marginals().iter().map(|m| m.grid().clone()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub pairs_checked: usize,
    pub partitions_checked: usize,
    /// Largest `(c(x) + c(y) - c(X) - c(Y))_+` seen.
    pub worst_violation: f64,
    /// Number of (pair, partition) checks whose violation exceeds the slack.
    pub violations: usize,
    pub slack: f64,
}

/// Pairs examined by [`check_c_monotone`]: all of them when there are at
/// most this many, otherwise a seeded random sample of this size.
pub const MONOTONICITY_PAIRS: usize = 10_000;

/// Check that exchanging any block of coordinates between two support
/// points does not lower the total cost by more than `slack`.
pub fn check_c_monotone(support: &SupportSet, spec: &CostSpec, slack: f64) -> Result<MonotonicityReport> {
    let n = spec.n();
    if n > 6 {
        return Err(Error::InvalidArgument(format!("partition enumeration supports n <= 6, got {n}")));
    }
    if support.grids.len() != n || support.entries.iter().any(|(idx, _)| idx.len() != n) {
        return Err(Error::Arity { expected: n, got: support.grids.len() });
    }
    let k = support.entries.len();
    let total_pairs = k * k.saturating_sub(1) / 2;
    let pairs: Vec<(usize, usize)> = if total_pairs <= MONOTONICITY_PAIRS {
        (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x6d6f_6e6f);
        let mut out = Vec::with_capacity(MONOTONICITY_PAIRS);
        for _ in 0..MONOTONICITY_PAIRS {
            let a = rng.gen_range(0..k);
            let mut b = rng.gen_range(0..k - 1);
            if b >= a {
                b += 1;
            }
            out.push((a.min(b), a.max(b)));
        }
        out
    };

    let points: Vec<Vec<f64>> = support.entries.iter().map(|(idx, _)| support.points(idx)).collect();
    // partitions p and their complements give the same exchange; skip the
    // empty set and keep only those without the last coordinate
    let partitions: Vec<u32> = (1..(1u32 << (n - 1))).collect();
    let mut worst = 0.0f64;
    let mut violations = 0;
    let mut xs = vec![0.0; n];
    let mut ys = vec![0.0; n];
    for &(a, b) in &pairs {
        let (x, y) = (&points[a], &points[b]);
        let lhs = spec.eval_unchecked(x) + spec.eval_unchecked(y);
        for &p in &partitions {
            for t in 0..n {
                let swap = p >> t & 1 == 1;
                xs[t] = if swap { y[t] } else { x[t] };
                ys[t] = if swap { x[t] } else { y[t] };
            }
            let rhs = spec.eval_unchecked(&xs) + spec.eval_unchecked(&ys);
            if rhs == f64::INFINITY {
                continue;
            }
            let v = (lhs - rhs).max(0.0);
            if v.is_nan() {
                continue;
            }
            worst = worst.max(v);
            if v > slack {
                violations += 1;
            }
        }
    }
    Ok(MonotonicityReport {
        pairs_checked: pairs.len(),
        partitions_checked: pairs.len() * partitions.len(),
        worst_violation: worst,
        violations,
        slack,
    })
}

/// Smallest distance between two coordinates of any support point.
pub fn diagonal_gap(support: &SupportSet) -> f64 {
    let mut gap = f64::INFINITY;
    for (idx, _) in &support.entries {
        let x = support.points(idx);
        for a in 0..x.len() {
            for b in a + 1..x.len() {
                gap = gap.min((x[a] - x[b]).abs());
            }
        }
    }
    gap
}

/// Fraction of the projection's mass within `radius` of the graph of `map`.
pub fn graph_concentration(projection: &PairProjection, map: &Map1D, radius: f64) -> f64 {
    graph_union_concentration(projection, std::slice::from_ref(map), radius)
}

/// Fraction of the projection's mass within `radius` of the union of the
/// graphs of `maps`.
pub fn graph_union_concentration(projection: &PairProjection, maps: &[Map1D], radius: f64) -> f64 {
    let total = projection.total_mass();
    if total <= 0.0 {
        return 0.0;
    }
    let tol = radius * (1.0 + 1e-9);
    let ys = projection.grid_col.centers();
    let mut near = 0.0;
    for (a, &x) in projection.grid_row.centers().iter().enumerate() {
        let targets: Vec<f64> = maps.iter().map(|m| m.eval(x)).collect();
        for (b, &v) in projection.row(a).iter().enumerate() {
            if targets.iter().any(|t| (ys[b] - t).abs() <= tol) {
                near += v;
            }
        }
    }
    near / total
}

/// Fraction of a two-dimensional support's mass within `radius` of the
/// union of the graphs of `maps`.
pub fn support_graph_concentration(support: &SupportSet, maps: &[Map1D], radius: f64) -> Result<f64> {
    if support.grids.len() != 2 {
        return Err(Error::Arity { expected: 2, got: support.grids.len() });
    }
    let total = support.mass();
    if total <= 0.0 {
        return Ok(0.0);
    }
    let tol = radius * (1.0 + 1e-9);
    let near: f64 = support
        .entries
        .iter()
        .filter(|(idx, _)| {
            let p = support.points(idx);
            maps.iter().any(|m| (m.eval(p[0]) - p[1]).abs() <= tol)
        })
        .map(|(_, v)| v)
        .sum();
    Ok(near / total)
}

/// Largest entry divided by the mean entry over cells holding at least
/// `eta` times the largest entry. Close to one for a flat projection.
pub fn peak_to_mean(projection: &PairProjection, eta: f64) -> Result<f64> {
    let support = threshold_support(projection, eta)?;
    if support.is_empty() {
        return Ok(f64::NAN);
    }
    let mean = support.mass() / support.len() as f64;
    Ok(projection.max_entry() / mean)
}
