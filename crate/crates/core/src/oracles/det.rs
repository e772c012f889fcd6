use crate::measures::DiscreteMeasure;
use crate::{Error, Result};

use super::Map1D;

/// Monotone rearrangements `H_i = F_i^-1 ∘ F_1` of radial marginals onto the
/// first one, with the cost of the plan they induce.
#[derive(Debug, Clone)]
pub struct RadialRearrangement {
    base: DiscreteMeasure,
    maps: Vec<Map1D>,
    cost: f64,
}

impl RadialRearrangement {
    pub fn base(&self) -> &DiscreteMeasure {
        &self.base
    }

    /// `H_2, ..., H_n`.
    pub fn maps(&self) -> &[Map1D] {
        &self.maps
    }

    /// `-∫ r H_2(r) ... H_n(r) dλ_1(r)`, the minimisation-convention cost.
    pub fn cost(&self) -> f64 {
        self.cost
    }
}

const SAMPLES_PER_CELL: usize = 64;

pub fn det_radial_solution(marginals: &[DiscreteMeasure]) -> Result<RadialRearrangement> {
    if marginals.len() < 2 {
        return Err(Error::Arity { expected: 2, got: marginals.len() });
    }
    if let Some(m) = marginals.iter().find(|m| m.grid().lo() < 0.0) {
        return Err(Error::InvalidArgument(format!("radial marginal grid starts at {} < 0", m.grid().lo())));
    }
    let base = marginals[0].clone();
    let f1 = base.cdf();
    let maps: Vec<Map1D> = marginals[1..]
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let fi = m.cdf();
            let f1 = f1.clone();
            let domain = (base.grid().lo(), base.grid().hi());
            Map1D::new(format!("monotone-rearrangement-{}", i + 2), domain, move |r| fi.quantile_continuous(f1.cdf(r)))
                .with_piece(domain.0, domain.1, format!("F_{}^-1(F_1(r))", i + 2))
        })
        .collect();

    // each cell's mass is spread uniformly over the cell
    let grid = base.grid();
    let h = grid.width() / SAMPLES_PER_CELL as f64;
    let mut integral = 0.0;
    for (j, &w) in base.weights().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let left = grid.lo() + j as f64 * grid.width();
        let mut cell = 0.0;
        for s in 0..SAMPLES_PER_CELL {
            let r = left + (s as f64 + 0.5) * h;
            cell += maps.iter().fold(r, |acc, m| acc * m.eval(r));
        }
        integral += w * cell / SAMPLES_PER_CELL as f64;
    }
    Ok(RadialRearrangement { base, maps, cost: -integral })
}
