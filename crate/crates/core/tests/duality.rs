use mmot::costs::CostSpec;
use mmot::ipfp::{anneal_solve_with, dual_report, ipfp_solve, primal_report, SolveOptions, SolveReport};
use mmot::measures::{make_density, DiscreteMeasure, Grid1D};

fn cosine(m: usize) -> DiscreteMeasure {
    make_density("cosine", &[1.0], &Grid1D::new(-1.0, 1.0, m).unwrap()).unwrap()
}

#[test]
fn dual_never_exceeds_primal() {
    let uniform = DiscreteMeasure::uniform(Grid1D::new(0.0, 1.0, 25).unwrap());
    let cases = [
        (CostSpec::coulomb(2).unwrap(), vec![cosine(40); 2], 0.05),
        (CostSpec::coulomb(3).unwrap(), vec![cosine(20); 3], 0.05),
        (CostSpec::log_repulsive(3).unwrap(), vec![cosine(20); 3], 0.05),
        (CostSpec::harmonic_sum(3).unwrap(), vec![uniform.clone(); 3], 0.02),
        (CostSpec::harmonic_pairwise(2).unwrap(), vec![uniform; 2], 0.01),
    ];
    for (spec, mus, eps) in cases {
        let (state, report) = ipfp_solve(&spec, &mus, &SolveOptions::new(eps).tol(1e-9)).unwrap();
        assert!(report.converged, "{:?}", spec.family());
        let p = primal_report(&state).unwrap();
        let d = dual_report(&state).unwrap();
        assert!(d.dual_value <= p.primal_cost, "{:?}: {} > {}", spec.family(), d.dual_value, p.primal_cost);
        assert!(report.duality_gap >= 0.0);
        assert!(d.violation >= 0.0);
    }
}

#[test]
fn gap_closes_as_the_temperature_drops() {
    let mu = cosine(60);
    let spec = CostSpec::coulomb(2).unwrap();
    let mut stages: Vec<SolveReport> = Vec::new();
    anneal_solve_with(
        &spec,
        &[mu.clone(), mu],
        &[0.2, 0.1, 0.05, 0.02, 0.01],
        &SolveOptions::new(0.2).tol(1e-9),
        |_, r| stages.push(r.clone()),
    )
    .unwrap();
    for w in stages.windows(2) {
        assert!(w[1].duality_gap < w[0].duality_gap, "{} then {}", w[0].duality_gap, w[1].duality_gap);
        assert!(w[1].primal_cost <= w[0].primal_cost);
    }
    for r in &stages {
        assert!(r.dual_value <= r.primal_cost);
    }
}

#[test]
fn two_point_harmonic_gap_is_small() {
    let mu = DiscreteMeasure::new(Grid1D::new(-0.5, 1.5, 2).unwrap(), vec![0.5, 0.5]).unwrap();
    let spec = CostSpec::harmonic_sum(2).unwrap();
    let mut gaps = Vec::new();
    let (_, last) = anneal_solve_with(
        &spec,
        &[mu.clone(), mu],
        &[1.0, 0.5, 0.25, 0.1, 0.02, 0.004],
        &SolveOptions::new(1.0).tol(1e-10),
        |_, r| gaps.push(r.duality_gap),
    )
    .unwrap();
    assert!(last.duality_gap <= 0.05, "gap {}", last.duality_gap);
    assert!(gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{gaps:?}");
    assert!((last.primal_cost - 1.0).abs() < 1e-6);
}
