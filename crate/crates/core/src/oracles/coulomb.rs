use crate::measures::DiscreteMeasure;
use crate::{Error, Result};

use super::Map1D;

fn check_diffuse(measure: &DiscreteMeasure, n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 marginals, got {n}")));
    }
    let (cell, mass) = measure.max_cell_mass();
    let limit = 1.0 / n as f64;
    if mass >= limit {
        return Err(Error::AtomicMeasure { cell, mass, limit });
    }
    Ok(())
}

fn domain(measure: &DiscreteMeasure) -> (f64, f64) {
    (measure.grid().lo(), measure.grid().hi())
}

/// Optimal cyclic map for the one-dimensional Coulomb cost with `n`
/// identical marginals: shift the quantile level by `1/n`, wrapping around.
pub fn coulomb_cyclic_map(measure: &DiscreteMeasure, n: usize) -> Result<Map1D> {
    check_diffuse(measure, n)?;
    let cdf = measure.cdf();
    let step = 1.0 / n as f64;
    let top = (n - 1) as f64 / n as f64;
    let (lo, hi) = domain(measure);
    let split = cdf.quantile_continuous(top);
    Ok(Map1D::new(format!("coulomb-cyclic-{n}"), (lo, hi), move |x| {
        let f = cdf.cdf(x);
        // absorb rounding in the cumulative sums at the wrap point
        if f <= top + 1e-12 {
            cdf.quantile_continuous(f + step)
        } else {
            cdf.quantile_continuous(f + step - 1.0)
        }
    })
    .with_piece(lo, split, format!("F^-1(F(x) + 1/{n})"))
    .with_piece(split, hi, format!("F^-1(F(x) + 1/{n} - 1)")))
}

/// Interval-wise anti-monotone radial map: the quantile intervals
/// `A_i = [F^-1(i/n), F^-1((i+1)/n))` are sent onto `A_{i+1}`, the last one
/// back onto `A_0`. Not optimal in general.
pub fn seidl_radial_map(measure: &DiscreteMeasure, n: usize) -> Result<Map1D> {
    check_diffuse(measure, n)?;
    if measure.grid().lo() < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "radial measure must live on [0, inf), grid starts at {}",
            measure.grid().lo()
        )));
    }
    let cdf = measure.cdf();
    let nf = n as f64;
    let (lo, hi) = domain(measure);
    let even = n % 2 == 0;
    let mut map = Map1D::new(format!("seidl-radial-{n}"), (lo, hi), move |r| {
        let f = cdf.cdf(r);
        // interval index, with the top endpoint kept in the last interval
        let i = ((f * nf).floor() as usize).min(n - 1);
        if i + 1 < n {
            cdf.quantile_continuous(2.0 * (i + 1) as f64 / nf - f)
        } else if even {
            cdf.quantile_continuous(f - (nf - 1.0) / nf)
        } else {
            cdf.quantile_continuous(1.0 - f)
        }
    });
    let bounds: Vec<f64> = (0..=n).map(|i| measure.cdf().quantile_continuous(i as f64 / nf)).collect();
    for i in 0..n - 1 {
        map = map.with_piece(bounds[i], bounds[i + 1], format!("F^-1({}/{n} - F(r))", 2 * (i + 1)));
    }
    let last = if even { format!("F^-1(F(r) - {}/{n})", n - 1) } else { "F^-1(1 - F(r))".to_string() };
    Ok(map
        .with_piece(bounds[n - 1], bounds[n], last)
        .with_note("conjectural: disproved in general, kept as a comparison candidate")
        .with_note("last-interval branch is an interpretation: the only reading that maps A_{n-1} onto A_0"))
}
