//! Streaming evaluation of the implicit coupling.
//!
//! Nothing here stores an `n`-index array. Contractions fix one output index
//! per task and walk the remaining indices in odometer order; the innermost
//! axis is handled as a contiguous row so the log-sum-exp can be shifted by a
//! row maximum. Each output entry is reduced sequentially by one task, so the
//! result does not depend on the number of worker threads.

use rayon::prelude::*;

use crate::costs::{CostFamily, CostSpec};

/// Terms more than this many nats below the running maximum are dropped from
/// a log-sum-exp. With at most `1e9` terms the relative error stays below `1e-12`.
pub(crate) const LSE_CUTOFF: f64 = 50.0;

/// Sequential log-sum-exp accumulator. The shifted form rescales by the
/// running maximum; the direct form sums `exp` of the raw values and so
/// underflows exactly like plain scaling would.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogSumExp {
    max: f64,
    sum: f64,
    shifted: bool,
}

impl LogSumExp {
    pub(crate) fn new() -> Self {
        Self { max: f64::NEG_INFINITY, sum: 0.0, shifted: true }
    }

    pub(crate) fn direct() -> Self {
        Self { max: 0.0, sum: 0.0, shifted: false }
    }

    pub(crate) fn with_mode(shifted: bool) -> Self {
        if shifted {
            Self::new()
        } else {
            Self::direct()
        }
    }

    /// Add every entry of `row`, each offset by `shift`.
    #[inline]
    pub(crate) fn push_row(&mut self, shift: f64, row: &[f64]) {
        if !self.shifted {
            let mut acc = 0.0;
            for &v in row {
                acc += (v + shift).exp();
            }
            self.sum += acc;
            return;
        }
        let mut rmax = f64::NEG_INFINITY;
        for &v in row {
            if v > rmax {
                rmax = v;
            }
        }
        let rmax = rmax + shift;
        if rmax == f64::NEG_INFINITY {
            return;
        }
        if rmax > self.max {
            if self.max > f64::NEG_INFINITY {
                self.sum *= (self.max - rmax).exp();
            }
            self.max = rmax;
        }
        let base = shift - self.max;
        let mut acc = 0.0;
        for &v in row {
            let d = v + base;
            if d > -LSE_CUTOFF {
                acc += d.exp();
            }
        }
        self.sum += acc;
    }

    pub(crate) fn finish(self) -> f64 {
        if self.max == f64::NEG_INFINITY || self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// Cost data needed to stream `log` Gibbs weights for one temperature.
pub(crate) struct LogKernel<'a> {
    spec: &'a CostSpec,
    points: Vec<&'a [f64]>,
    sizes: Vec<usize>,
    inv_eps: f64,
    /// `-unary(x)/eps` per axis.
    unary: Vec<Vec<f64>>,
    /// `-pair(x_a, x_b)/eps` for every ordered pair `a != b`, row-major in `a`.
    /// `None` when the cost has no pairwise split.
    pairs: Option<Vec<Vec<Vec<f64>>>>,
    /// The cost is `-prod x_i`, so a row is affine in the innermost point.
    product: bool,
}

impl<'a> LogKernel<'a> {
    pub(crate) fn new(spec: &'a CostSpec, points: Vec<&'a [f64]>, epsilon: f64, use_tables: bool) -> Self {
        let n = spec.n();
        let sizes: Vec<usize> = points.iter().map(|p| p.len()).collect();
        let inv_eps = 1.0 / epsilon;
        let unary = (0..n)
            .map(|a| points[a].iter().map(|&x| -spec.unary_term(a, x) * inv_eps).collect())
            .collect();
        let pairs = (use_tables && spec.is_pairwise()).then(|| {
            (0..n)
                .map(|a| {
                    (0..n)
                        .map(|b| {
                            if a == b {
                                return Vec::new();
                            }
                            let mut t = Vec::with_capacity(sizes[a] * sizes[b]);
                            for &xa in points[a] {
                                for &xb in points[b] {
                                    let c = if a < b {
                                        spec.pair_term(a, b, xa, xb)
                                    } else {
                                        spec.pair_term(b, a, xb, xa)
                                    };
                                    t.push(-c * inv_eps);
                                }
                            }
                            t
                        })
                        .collect()
                })
                .collect()
        });
        let product = spec.family() == CostFamily::DetRadialProduct;
        Self { spec, points, sizes, inv_eps, unary, pairs, product }
    }

    /// `log S_k[j]`: log of the sum over all indices with `j_k = j` of the
    /// Gibbs weight times every scaling except the `k`-th.
    /// With `shifted == false` the sums are formed without any rescaling.
    pub(crate) fn contract_log(&self, log_scalings: &[Vec<f64>], k: usize, shifted: bool) -> Vec<f64> {
        match &self.pairs {
            Some(pairs) => self.contract_log_pairwise(pairs, log_scalings, k, shifted),
            None => self.contract_log_generic(log_scalings, k, shifted),
        }
    }

    fn contract_log_pairwise(&self, pairs: &[Vec<Vec<f64>>], u: &[Vec<f64>], k: usize, shifted: bool) -> Vec<f64> {
        let n = self.sizes.len();
        let free: Vec<usize> = (0..n).filter(|&a| a != k).collect();
        let r = free.len();
        let base: Vec<Vec<f64>> = free
            .iter()
            .map(|&f| {
                u[f].iter().zip(&self.unary[f]).map(|(&uf, &un)| uf * self.inv_eps + un).collect()
            })
            .collect();

        (0..self.sizes[k])
            .into_par_iter()
            .map(|jk| {
                // levels[d][e]: accumulated row for free axis e (e >= d) once
                // the axes before d are fixed.
                let mut levels: Vec<Vec<Vec<f64>>> = (0..r)
                    .map(|d| (0..r).map(|e| if e >= d { vec![0.0; self.sizes[free[e]]] } else { Vec::new() }).collect())
                    .collect();
                for e in 0..r {
                    let f = free[e];
                    let m = self.sizes[f];
                    let table = &pairs[k][f][jk * m..(jk + 1) * m];
                    for ((dst, &b), &t) in levels[0][e].iter_mut().zip(&base[e]).zip(table) {
                        *dst = b + t;
                    }
                }
                let mut lse = LogSumExp::with_mode(shifted);
                descend(pairs, &free, &mut levels, 0, self.unary[k][jk], &mut lse);
                lse.finish()
            })
            .collect()
    }

    fn contract_log_generic(&self, u: &[Vec<f64>], k: usize, shifted: bool) -> Vec<f64> {
        (0..self.sizes[k])
            .into_par_iter()
            .map(|jk| {
                let mut lse = LogSumExp::with_mode(shifted);
                self.for_each_row(&[(k, jk)], |_, row| lse.push_row(0.0, row), Some(u), Some(k));
                lse.finish()
            })
            .collect()
    }

    /// Walk every multi-index agreeing with `fixed`, one innermost row at a
    /// time. The row holds `log` Gibbs weights, plus `u/eps` of every axis
    /// except `skip` when `u` is given. The callback receives the full index
    /// (innermost coordinate set to 0) and the row.
    pub(crate) fn for_each_row<F>(&self, fixed: &[(usize, usize)], mut f: F, u: Option<&[Vec<f64>]>, skip: Option<usize>)
    where
        F: FnMut(&[usize], &[f64]),
    {
        let n = self.sizes.len();
        let is_fixed = |a: usize| fixed.iter().any(|&(b, _)| b == a);
        let free: Vec<usize> = (0..n).filter(|&a| !is_fixed(a)).collect();
        let mut idx = vec![0usize; n];
        let mut pts = vec![0.0; n];
        for &(a, j) in fixed {
            idx[a] = j;
            pts[a] = self.points[a][j];
        }
        let scale = |a: usize, j: usize| -> f64 {
            match u {
                Some(u) if Some(a) != skip => u[a][j] * self.inv_eps,
                _ => 0.0,
            }
        };

        if free.is_empty() {
            let mut s = 0.0;
            for a in 0..n {
                s += scale(a, idx[a]);
            }
            let v = s - self.spec.eval_unchecked(&pts) * self.inv_eps;
            f(&idx, &[v]);
            return;
        }

        let inner = *free.last().unwrap();
        let outer = &free[..free.len() - 1];
        let mut row = vec![0.0; self.sizes[inner]];
        loop {
            let mut shift = 0.0;
            for a in 0..n {
                if a != inner {
                    pts[a] = self.points[a][idx[a]];
                    shift += scale(a, idx[a]);
                }
            }
            if self.product {
                let coef: f64 = (0..n).filter(|&a| a != inner).map(|a| pts[a]).product::<f64>() * self.inv_eps;
                for (j, slot) in row.iter_mut().enumerate() {
                    *slot = shift + scale(inner, j) + coef * self.points[inner][j];
                }
            } else {
                for (j, slot) in row.iter_mut().enumerate() {
                    pts[inner] = self.points[inner][j];
                    *slot = shift + scale(inner, j) - self.spec.eval_unchecked(&pts) * self.inv_eps;
                }
            }
            idx[inner] = 0;
            f(&idx, &row);

            // advance the odometer over the outer free axes
            let mut d = outer.len();
            loop {
                if d == 0 {
                    return;
                }
                d -= 1;
                let a = outer[d];
                idx[a] += 1;
                if idx[a] < self.sizes[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
    }
}

fn descend(
    pairs: &[Vec<Vec<f64>>],
    free: &[usize],
    levels: &mut [Vec<Vec<f64>>],
    depth: usize,
    partial: f64,
    lse: &mut LogSumExp,
) {
    // levels[0] is the level for `depth`
    let r = free.len();
    if depth + 1 == r {
        lse.push_row(partial, &levels[0][depth]);
        return;
    }
    let (head, rest) = levels.split_at_mut(1);
    let cur = &head[0];
    let a = free[depth];
    for j in 0..cur[depth].len() {
        let v = partial + cur[depth][j];
        if v == f64::NEG_INFINITY {
            continue;
        }
        for e in depth + 1..r {
            let b = free[e];
            let mb = cur[e].len();
            let table = &pairs[a][b][j * mb..(j + 1) * mb];
            for ((dst, &src), &t) in rest[0][e].iter_mut().zip(&cur[e]).zip(table) {
                *dst = src + t;
            }
        }
        descend(pairs, free, rest, depth + 1, v, lse);
    }
}
