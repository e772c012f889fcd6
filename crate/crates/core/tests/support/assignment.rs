//! Exact two-marginal transport optima by exhaustive search.
//!
//! Weights must be multiples of `1/atoms`. Each cell is split into that many
//! unit atoms, which turns the transport problem into an `atoms x atoms`
//! assignment problem; its optimum over all permutations is the transport
//! optimum (every vertex of the doubly stochastic polytope is a permutation).

use mmot::costs::CostSpec;
use mmot::measures::DiscreteMeasure;

/// Largest atom count searched; `8! = 40320` permutations.
pub const MAX_ATOMS: usize = 8;

fn atoms_of(measure: &DiscreteMeasure, atoms: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(atoms);
    for (&x, &w) in measure.grid().centers().iter().zip(measure.weights()) {
        let k = (w * atoms as f64).round();
        assert!((w * atoms as f64 - k).abs() < 1e-9, "weight {w} is not a multiple of 1/{atoms}");
        out.extend(std::iter::repeat(x).take(k as usize));
    }
    assert_eq!(out.len(), atoms);
    out
}

/// Minimum of `sum_r c[r][p(r)] / atoms` over permutations `p`, skipping
/// infinite costs. `None` when every permutation hits an infinite cost.
pub fn exact_optimum(spec: &CostSpec, a: &DiscreteMeasure, b: &DiscreteMeasure, atoms: usize) -> Option<f64> {
    assert_eq!(spec.n(), 2);
    assert!(atoms >= 1 && atoms <= MAX_ATOMS);
    let xs = atoms_of(a, atoms);
    let ys = atoms_of(b, atoms);
    let c: Vec<Vec<f64>> = xs.iter().map(|&x| ys.iter().map(|&y| spec.eval(&[x, y]).unwrap().value()).collect()).collect();

    // depth-first over partial assignments; a row may only take unused columns
    fn search(row: usize, used: &mut [bool], acc: f64, c: &[Vec<f64>], best: &mut f64) {
        if row == c.len() {
            *best = best.min(acc);
            return;
        }
        for col in 0..c.len() {
            if used[col] || !c[row][col].is_finite() {
                continue;
            }
            used[col] = true;
            search(row + 1, used, acc + c[row][col], c, best);
            used[col] = false;
        }
    }
    let mut best = f64::INFINITY;
    search(0, &mut vec![false; atoms], 0.0, &c, &mut best);
    best.is_finite().then(|| best / atoms as f64)
}

use mmot::costs::cost_scale;
use mmot::ipfp::{ipfp_solve, SolveOptions, SolveReport};
use mmot::measures::Grid1D;

pub struct Instance {
    pub label: String,
    pub spec: CostSpec,
    pub a: DiscreteMeasure,
    pub b: DiscreteMeasure,
    pub atoms: usize,
}

fn measure(lo: f64, hi: f64, counts: &[usize]) -> DiscreteMeasure {
    let g = Grid1D::new(lo, hi, counts.len()).unwrap();
    DiscreteMeasure::new(g, counts.iter().map(|&k| k as f64).collect()).unwrap()
}

/// Two-marginal instances with `m <= 8` covering every cost family, with
/// both uniform and non-uniform weights.
pub fn instances() -> Vec<Instance> {
    let mut out = Vec::new();
    let mut add = |label: &str, spec: CostSpec, a: DiscreteMeasure, b: DiscreteMeasure, atoms: usize| {
        out.push(Instance { label: label.to_string(), spec, a, b, atoms });
    };
    let ones = |m: usize| vec![1; m];
    add("coulomb uniform m=6", CostSpec::coulomb(2).unwrap(), measure(0.0, 1.0, &ones(6)), measure(0.0, 1.0, &ones(6)), 6);
    add("coulomb weighted m=4", CostSpec::coulomb(2).unwrap(), measure(-1.0, 1.0, &[1, 3, 3, 1]), measure(-1.0, 1.0, &[2, 2, 2, 2]), 8);
    add("log uniform m=5", CostSpec::log_repulsive(2).unwrap(), measure(0.0, 1.0, &ones(5)), measure(0.0, 1.0, &ones(5)), 5);
    add("log weighted m=4/8", CostSpec::log_repulsive(2).unwrap(), measure(0.0, 1.0, &[1, 2, 3, 2]), measure(0.05, 0.95, &ones(8)), 8);
    add("harmonic-sum weighted", CostSpec::harmonic_sum(2).unwrap(), measure(0.0, 1.0, &[1, 2, 3, 2]), measure(-0.5, 1.5, &ones(8)), 8);
    add("harmonic-sum uniform m=7", CostSpec::harmonic_sum(2).unwrap(), measure(0.0, 1.0, &ones(7)), measure(0.2, 1.0, &ones(7)), 7);
    add("harmonic-pairwise weighted", CostSpec::harmonic_pairwise(2).unwrap(), measure(0.0, 1.0, &ones(8)), measure(0.0, 2.0, &[2, 1, 1, 2, 2]), 8);
    add("harmonic-pairwise uniform m=8", CostSpec::harmonic_pairwise(2).unwrap(), measure(0.0, 1.0, &ones(8)), measure(0.0, 1.0, &ones(8)), 8);
    add("penalized uniform m=6", CostSpec::penalized_harmonic(2, 0.1).unwrap(), measure(-1.0, 1.0, &ones(6)), measure(-1.0, 1.0, &ones(6)), 6);
    add("penalized weighted", CostSpec::penalized_harmonic(2, 0.1).unwrap(), measure(-1.0, 1.0, &[3, 1, 1, 3]), measure(-0.9, 1.1, &ones(8)), 8);
    add("carlier uniform m=5", CostSpec::carlier(2).unwrap(), measure(0.0, 1.0, &ones(5)), measure(-1.0, 1.0, &ones(5)), 5);
    add("carlier weighted", CostSpec::carlier(2).unwrap(), measure(0.1, 1.1, &[2, 1, 3, 2]), measure(-1.0, 1.0, &ones(8)), 8);
    add("det uniform m=6", CostSpec::det_radial(2).unwrap(), measure(0.0, 1.0, &ones(6)), measure(0.0, 2.0, &ones(6)), 6);
    add("det weighted", CostSpec::det_radial(2).unwrap(), measure(0.0, 1.0, &[1, 2, 3, 2]), measure(0.0, 2.0, &ones(8)), 8);
    out
}

/// Entropic solve at `eps = 1e-3 * cost_scale`, reached through a short
/// annealing schedule. Returns the report and the cost scale.
pub fn entropic_solve(inst: &Instance) -> (SolveReport, f64) {
    let scale = cost_scale(&inst.spec, &[inst.a.grid(), inst.b.grid()]);
    let eps = 1e-3 * scale;
    let opts = SolveOptions::new(eps).tol(1e-10).max_sweeps(100_000).anneal(vec![scale, 0.1 * scale, 0.01 * scale]);
    let (_, report) = ipfp_solve(&inst.spec, &[inst.a.clone(), inst.b.clone()], &opts).unwrap();
    (report, scale)
}
