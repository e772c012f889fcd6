//! Closed-form optimal maps and plans used as references for the solver.

mod coulomb;
mod det;
mod fractal;
mod harmonic;
mod map;

pub use coulomb::{coulomb_cyclic_map, seidl_radial_map};
pub use det::{det_radial_solution, RadialRearrangement};
pub use fractal::{fractal_map, orbit_sum, FractalMap};
pub use harmonic::{diffuse_plan, flat_plan_value, harmonic_pair_maps, HyperplanePlan};
pub use map::{Map1D, MapPiece};

use crate::costs::CostSpec;
use crate::measures::DiscreteMeasure;
use crate::{Error, Result};

/// Cost of the deterministic plan `x -> (x, T_2(x), ..., T_n(x))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanCost {
    pub value: f64,
    /// Some point of the plan had infinite cost; `value` is then `+inf`.
    pub hit_infinity: bool,
}

/// `sum_j w_j c(x_j, T_2(x_j), ..., T_n(x_j))` over the cell centers of
/// `measure`. `maps` holds `T_2, ..., T_n`; the identity is prepended.
pub fn map_plan_cost(maps: &[Map1D], spec: &CostSpec, measure: &DiscreteMeasure) -> Result<PlanCost> {
    if maps.len() + 1 != spec.n() {
        return Err(Error::Arity { expected: spec.n(), got: maps.len() + 1 });
    }
    let mut pts = vec![0.0; spec.n()];
    let mut value = 0.0;
    for (&x, &w) in measure.grid().centers().iter().zip(measure.weights()) {
        if w == 0.0 {
            continue;
        }
        pts[0] = x;
        for (p, m) in pts[1..].iter_mut().zip(maps) {
            *p = m.eval(x);
        }
        let c = spec.eval(&pts)?.value();
        if c == f64::INFINITY {
            return Ok(PlanCost { value: f64::INFINITY, hit_infinity: true });
        }
        value += w * c;
    }
    Ok(PlanCost { value, hit_infinity: false })
}
