use std::fmt;
use std::sync::Arc;

use crate::costs::{CostFamily, CostSpec};
use crate::measures::DiscreteMeasure;
use crate::{Error, Result};

use super::Map1D;

/// Two maps on `[-1, 1]` with `x + T(x) + S(x) = 0` that both preserve
/// `1/2` Lebesgue, yet generate no group: `T` has order two, `S` does not.
pub fn harmonic_pair_maps() -> (Map1D, Map1D) {
    let t = Map1D::new("harmonic-t", (-1.0, 1.0), |x| if x <= 0.0 { x + 1.0 } else { x - 1.0 })
        .with_piece(-1.0, 0.0, "x + 1")
        .with_piece(0.0, 1.0, "x - 1");
    let s = Map1D::new("harmonic-s", (-1.0, 1.0), |x| if x <= 0.0 { -1.0 - 2.0 * x } else { 1.0 - 2.0 * x })
        .with_piece(-1.0, 0.0, "-1 - 2x")
        .with_piece(0.0, 1.0, "1 - 2x");
    (t, s)
}

/// `h(k)` for `k` the sum of the barycenters: the optimal value of the
/// sum-form harmonic cost whenever a plan concentrated on `sum x_i = k`
/// exists, and a lower bound on every plan's cost in any case.
pub fn flat_plan_value(spec: &CostSpec, marginals: &[DiscreteMeasure]) -> Result<f64> {
    if spec.family() != CostFamily::HarmonicSum {
        return Err(Error::InvalidCost(format!(
            "flat plan value needs the harmonic-sum cost, got {}",
            spec.family().name()
        )));
    }
    if marginals.len() != spec.n() {
        return Err(Error::Arity { expected: spec.n(), got: marginals.len() });
    }
    let k: f64 = marginals.iter().map(|m| m.mean()).sum();
    Ok(k * k)
}

type Weight = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Three-marginal plan on `H = {x + y + z = 0} ∩ [-1, 1]^3` with density
/// `f(max(|x|, |y|, |z|))` against area measure on `H`. Every marginal has
/// density `h(|x|)` on `[-1, 1]`.
#[derive(Clone)]
pub struct HyperplanePlan {
    h: Weight,
    /// `f` tabulated on `[0, 1]`, linearly interpolated.
    table: Vec<f64>,
}

impl fmt::Debug for HyperplanePlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HyperplanePlan").field("table_len", &self.table.len()).finish()
    }
}

const TABLE_SIZE: usize = 4096;
const SIMPSON_PANELS: usize = 2000;

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels + panels % 2;
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// Build the plan for a weight `h` that is nonincreasing on `[0, 1]` with
/// `∫_{-1}^{1} h(|x|) dx = 1`.
pub fn diffuse_plan<H>(h: H) -> Result<HyperplanePlan>
where
    H: Fn(f64) -> f64 + Send + Sync + 'static,
{
    let probe: Vec<f64> = (0..=1000).map(|i| h(i as f64 / 1000.0)).collect();
    if probe.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidWeightFunction("h must be finite and nonnegative on [0, 1]".into()));
    }
    if probe.windows(2).any(|w| w[1] > w[0] + 1e-12) {
        return Err(Error::InvalidWeightFunction("h must be nonincreasing on [0, 1]".into()));
    }
    let mass = 2.0 * simpson(&h, 0.0, 1.0, SIMPSON_PANELS);
    if (mass - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidWeightFunction(format!("h integrates to {mass} over [-1, 1], expected 1")));
    }

    // f(x) = (h(x) x - 2x ∫_x^1 (h(t) - h(x)) / t^3 dt) / sqrt 3, which is the
    // defining formula with the h(x)/x singularity cancelled analytically
    let f_at = |x: f64| -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let hx = h(x);
        // t = x^(1-s), dt = -ln(x) t ds
        let lx = -x.ln();
        let inner = simpson(|s| {
            let t = (-(1.0 - s) * lx).exp();
            (h(t) - hx) / (t * t) * lx
        }, 0.0, 1.0, SIMPSON_PANELS);
        (hx * x - 2.0 * x * inner) / 3f64.sqrt()
    };
    let mut table: Vec<f64> = (0..=TABLE_SIZE).map(|i| f_at(i as f64 / TABLE_SIZE as f64)).collect();
    // f is only defined for x > 0 and its limit at 0 need not vanish
    table[0] = 2.0 * table[1] - table[2];
    if table.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidWeightFunction("weight f is not finite".into()));
    }
    Ok(HyperplanePlan { h: Arc::new(h), table })
}

impl HyperplanePlan {
    /// The radial weight `f`.
    pub fn weight(&self, r: f64) -> f64 {
        if !(0.0..=1.0).contains(&r) {
            return 0.0;
        }
        let s = r * TABLE_SIZE as f64;
        let i = (s.floor() as usize).min(TABLE_SIZE - 1);
        let frac = s - i as f64;
        self.table[i] * (1.0 - frac) + self.table[i + 1] * frac
    }

    /// The target marginal density `h(|x|)`.
    pub fn h(&self, x: f64) -> f64 {
        (self.h)(x.abs())
    }

    /// Density at a point of `H`; zero off `H` or outside the cube.
    pub fn density(&self, x: f64, y: f64, z: f64) -> f64 {
        if (x + y + z).abs() > 1e-12 {
            return 0.0;
        }
        let r = x.abs().max(y.abs()).max(z.abs());
        if r > 1.0 {
            0.0
        } else {
            self.weight(r)
        }
    }

    /// Density of the first marginal at `x`, by quadrature along the line of
    /// `H` with that first coordinate. Area on `H` is `sqrt 3 dx dy`.
    pub fn marginal_density(&self, x: f64) -> f64 {
        if x.abs() > 1.0 {
            return 0.0;
        }
        let lo = (-1.0f64).max(-1.0 - x);
        let hi = 1.0f64.min(1.0 - x);
        // the integrand has kinks where two of |x|, |y|, |x + y| tie
        let mut cuts = vec![lo, hi, x.abs(), -x.abs(), -x / 2.0, -2.0 * x];
        cuts.retain(|c| *c >= lo && *c <= hi);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        let g = |y: f64| self.weight(x.abs().max(y.abs()).max((x + y).abs()));
        let mut total = 0.0;
        for w in cuts.windows(2) {
            total += simpson(g, w[0], w[1], 200);
        }
        3f64.sqrt() * total
    }

    /// Total mass of the plan.
    pub fn total_mass(&self) -> f64 {
        let cuts = [-1.0, -0.5, 0.0, 0.5, 1.0];
        cuts.windows(2).map(|w| simpson(|x| self.marginal_density(x), w[0], w[1], 200)).sum()
    }
}
