//! Measured quantities behind the oracle property suite. Each function
//! returns the worst value found so callers can assert or report it.

use mmot::costs::CostSpec;
use mmot::measures::{make_density, DiscreteMeasure, Grid1D};
use mmot::oracles::{
    coulomb_cyclic_map, det_radial_solution, diffuse_plan, flat_plan_value, fractal_map, harmonic_pair_maps, orbit_sum,
    seidl_radial_map, Map1D,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest digit count checked for base `n`: at most 10 and at most about
/// `2^24` cells.
pub fn max_digits(n: usize) -> u32 {
    (1..=10u32).take_while(|&k| (n as u64).pow(k) <= 1 << 24).last().unwrap()
}

/// Failures of the fractal map: cells not permuted, orbits of the wrong
/// length, orbit sums different from `n/2` in exact cell arithmetic, and the
/// largest floating-point orbit-sum error at sampled points.
#[derive(Debug, Default, Clone, Copy)]
pub struct FractalCheck {
    pub not_permutation: usize,
    pub bad_order: usize,
    pub bad_integer_orbit_sum: usize,
    pub float_orbit_error: f64,
}

pub fn fractal_check(n: usize, k: u32) -> FractalCheck {
    let f = fractal_map(n, k).unwrap();
    let cells = f.cells();
    let perm = f.permutation();
    let mut out = FractalCheck::default();
    let mut seen = vec![false; cells];
    for &p in &perm {
        if p >= cells || seen[p] {
            out.not_permutation += 1;
        } else {
            seen[p] = true;
        }
    }
    // centers are (2 idx + 1) / (2 n^k); an orbit of n centers sums to n/2
    // exactly when the odd numerators sum to n^(k+1)
    let target = (cells as u64) * n as u64;
    for start in 0..cells {
        let mut idx = start;
        let mut sum = 0u64;
        for _ in 0..n {
            sum += 2 * idx as u64 + 1;
            idx = perm[idx];
        }
        if idx != start {
            out.bad_order += 1;
        }
        if sum != target {
            out.bad_integer_orbit_sum += 1;
        }
    }
    let step = (cells / 997).max(1);
    for j in (0..cells).step_by(step) {
        let z = (j as f64 + 0.5) / cells as f64;
        out.float_orbit_error = out.float_orbit_error.max((orbit_sum(&f, z) - n as f64 / 2.0).abs());
    }
    out
}

/// Largest `|S(x) - (1 - x)|` for the base-2 map at sampled points.
pub fn fractal_two_is_reflection() -> f64 {
    let f = fractal_map(2, 10).unwrap();
    (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).map(|x| (f.eval(x) - (1.0 - x)).abs()).fold(0.0, f64::max)
}

pub const PUSHFORWARD_SAMPLES: usize = 1000;

/// `(label, TV(T#base, target))` for every oracle map at `m >= 200`.
pub fn pushforward_errors() -> Vec<(String, f64)> {
    let mut out = Vec::new();
    let mut push = |label: String, map: &Map1D, base: &DiscreteMeasure, target: &DiscreteMeasure| {
        out.push((label, map.pushforward_tv(base, target, PUSHFORWARD_SAMPLES).unwrap()));
    };

    let g = Grid1D::new(-5.0, 5.0, 200).unwrap();
    let cosine = make_density("cosine", &[5.0], &g).unwrap();
    for n in 2..=5 {
        let t = coulomb_cyclic_map(&cosine, n).unwrap();
        push(format!("coulomb-cyclic n={n}"), &t, &cosine, &cosine);
    }

    let gr = Grid1D::new(0.0, 3.0, 300).unwrap();
    let radial = make_density("radial-exponential", &[4.0], &gr).unwrap();
    for n in 2..=4 {
        let s = seidl_radial_map(&radial, n).unwrap();
        push(format!("seidl n={n}"), &s, &radial, &radial);
    }

    let gh = Grid1D::new(-1.0, 1.0, 200).unwrap();
    let half = make_density("half-lebesgue", &[], &gh).unwrap();
    let (t, s) = harmonic_pair_maps();
    push("harmonic T".into(), &t, &half, &half);
    push("harmonic S".into(), &s, &half, &half);

    let gu = Grid1D::new(0.0, 1.0, 243).unwrap();
    let unif = DiscreteMeasure::uniform(gu);
    for n in [2, 3] {
        let f = fractal_map(n, 5).unwrap();
        push(format!("fractal n={n}"), f.map(), &unif, &unif);
    }

    let gm = Grid1D::new(0.0, 4.0, 400).unwrap();
    let lambdas = vec![
        make_density("radial-exponential", &[4.0], &gm).unwrap(),
        make_density("gaussian", &[2.0, 0.5], &gm).unwrap(),
        make_density("radial-uniform-ball", &[4.0], &gm).unwrap(),
    ];
    let sol = det_radial_solution(&lambdas).unwrap();
    for (k, h) in sol.maps().iter().enumerate() {
        push(format!("det rearrangement H{}", k + 2), h, &lambdas[0], &lambdas[k + 1]);
    }
    out
}

/// Largest `|marginal density - h|` over `[-1, 1]` for several weights `h`.
pub fn diffuse_marginal_error() -> f64 {
    let weights: Vec<Box<dyn Fn(f64) -> f64 + Send + Sync>> = vec![
        Box::new(|_| 0.5),
        Box::new(|x: f64| 1.0 - x.abs()),
        Box::new(|x: f64| 0.75 * (1.0 - x * x)),
    ];
    let mut worst = 0.0f64;
    for h in weights {
        let probe: Vec<f64> = (0..=40).map(|i| -1.0 + i as f64 / 20.0).collect();
        let expect: Vec<f64> = probe.iter().map(|&x| h(x.abs())).collect();
        let plan = diffuse_plan(h).unwrap();
        for (&x, &e) in probe.iter().zip(&expect) {
            worst = worst.max((plan.marginal_density(x) - e).abs());
        }
    }
    worst
}

/// Smallest `cost - h(k)` over random feasible couplings of uniform
/// marginals: mixtures of one to three random assignment plans, each a
/// perturbation of the deterministic flat plan.
pub fn flat_plan_margin(couplings: usize, seed: u64) -> f64 {
    let m = 12;
    let g = Grid1D::new(0.0, 1.0, m).unwrap();
    let mu = DiscreteMeasure::uniform(g.clone());
    let spec = CostSpec::harmonic_sum(3).unwrap();
    let h = flat_plan_value(&spec, &[mu.clone(), mu.clone(), mu]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = g.centers();
    let mut worst = f64::INFINITY;
    for _ in 0..couplings {
        let parts = rng.gen_range(1..=3);
        let mut weights: Vec<f64> = (0..parts).map(|_| rng.gen_range(0.1..1.0)).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        let mut cost = 0.0;
        for w in weights {
            let mut p2: Vec<usize> = (0..m).rev().collect();
            let mut p3: Vec<usize> = (0..m).collect();
            // a few random transpositions away from the anti-diagonal pairing
            for _ in 0..rng.gen_range(0..m) {
                let (a, b) = (rng.gen_range(0..m), rng.gen_range(0..m));
                p2.swap(a, b);
            }
            p3.shuffle(&mut rng);
            for j in 0..m {
                let s = x[j] + x[p2[j]] + x[p3[j]];
                cost += w * s * s / m as f64;
            }
        }
        worst = worst.min(cost - h);
    }
    worst
}
