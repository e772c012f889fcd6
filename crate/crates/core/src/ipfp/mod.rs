//! Entropic multi-marginal solver.
//!
//! The coupling is never stored. A [`ScalingState`] keeps one potential
//! `u_i = eps * log a_i` per marginal, and every entry of the coupling is
//! recovered on demand as `exp((sum_i u_i[j_i] - c(j)) / eps)`.
//!
//! ```
//! use mmot::costs::CostSpec;
//! use mmot::ipfp::{ipfp_solve, SolveOptions};
//! use mmot::measures::{DiscreteMeasure, Grid1D};
//!
//! let mu = DiscreteMeasure::uniform(Grid1D::new(0.0, 1.0, 16).unwrap());
//! let spec = CostSpec::coulomb(2).unwrap();
//! let (state, report) = ipfp_solve(&spec, &[mu.clone(), mu], &SolveOptions::new(0.05)).unwrap();
//! assert!(report.converged);
//! assert!(report.dual_value <= report.primal_cost);
//! assert_eq!(state.log_scalings().len(), 2);
//! ```

mod stream;

use std::time::Instant;

use rayon::prelude::*;

use crate::costs::{cost_scale, CostSpec};
use crate::measures::DiscreteMeasure;
use crate::{Error, Result};

pub(crate) use stream::LogKernel;

/// Default cap on the number of multi-indices visited by one contraction.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

/// Direct scaling is used when `epsilon >= LOG_DOMAIN_RATIO * cost_scale`.
pub const LOG_DOMAIN_RATIO: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub epsilon: f64,
    /// Stop once every marginal is within this L1 distance of its target.
    pub tol: f64,
    pub max_sweeps: usize,
    /// `None` picks log-domain or direct scaling from the cost scale.
    pub log_domain: Option<bool>,
    pub budget: u64,
    /// Warm-up temperatures. Entries above `epsilon` are solved first, in
    /// order, each stage starting from the previous potentials.
    pub anneal: Option<Vec<f64>>,
    /// Record the KL objective every this many sweeps.
    pub trace_every: Option<usize>,
}

impl SolveOptions {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            tol: 1e-8,
            max_sweeps: 10_000,
            log_domain: None,
            budget: DEFAULT_BUDGET,
            anneal: None,
            trace_every: None,
        }
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn max_sweeps(mut self, max_sweeps: usize) -> Self {
        self.max_sweeps = max_sweeps;
        self
    }

    pub fn log_domain(mut self, on: bool) -> Self {
        self.log_domain = Some(on);
        self
    }

    pub fn budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn anneal(mut self, schedule: Vec<f64>) -> Self {
        self.anneal = Some(schedule);
        self
    }

    pub fn trace_every(mut self, sweeps: usize) -> Self {
        self.trace_every = Some(sweeps);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidOptions(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidOptions(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidOptions("max_sweeps must be positive".into()));
        }
        if self.budget == 0 {
            return Err(Error::InvalidOptions("budget must be positive".into()));
        }
        if self.trace_every == Some(0) {
            return Err(Error::InvalidOptions("trace_every must be positive".into()));
        }
        match &self.anneal {
            Some(schedule) if !schedule.is_empty() => check_schedule(schedule)?,
            _ => {}
        }
        Ok(())
    }
}

fn check_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::InvalidOptions("annealing schedule is empty".into()));
    }
    if schedule.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidOptions("annealing temperatures must be positive".into()));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidOptions("annealing schedule must be strictly decreasing".into()));
    }
    Ok(())
}

/// Potentials of the implicit coupling.
#[derive(Debug, Clone)]
pub struct ScalingState {
    spec: CostSpec,
    marginals: Vec<DiscreteMeasure>,
    epsilon: f64,
    log_scalings: Vec<Vec<f64>>,
    budget: u64,
}

impl ScalingState {
    /// Zero potentials, i.e. all scalings equal to one.
    pub fn new(spec: &CostSpec, marginals: &[DiscreteMeasure], epsilon: f64) -> Result<Self> {
        if marginals.len() != spec.n() {
            return Err(Error::Arity { expected: spec.n(), got: marginals.len() });
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidOptions(format!("epsilon must be positive, got {epsilon}")));
        }
        let log_scalings = marginals.iter().map(|m| vec![0.0; m.len()]).collect();
        Ok(Self {
            spec: spec.clone(),
            marginals: marginals.to_vec(),
            epsilon,
            log_scalings,
            budget: DEFAULT_BUDGET,
        })
    }

    /// Build a state from given potentials. Entries may be `-inf` only where
    /// the marginal vanishes.
    pub fn with_potentials(
        spec: &CostSpec,
        marginals: &[DiscreteMeasure],
        epsilon: f64,
        log_scalings: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let mut state = Self::new(spec, marginals, epsilon)?;
        if log_scalings.len() != marginals.len() {
            return Err(Error::Arity { expected: marginals.len(), got: log_scalings.len() });
        }
        for (i, (u, mu)) in log_scalings.iter().zip(marginals).enumerate() {
            if u.len() != mu.len() {
                return Err(Error::InvalidArgument(format!(
                    "potential {i} has {} entries, marginal has {}",
                    u.len(),
                    mu.len()
                )));
            }
            if u.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
                return Err(Error::InvalidArgument(format!("potential {i} has NaN or +inf entries")));
            }
        }
        state.log_scalings = log_scalings;
        Ok(state)
    }

    pub fn spec(&self) -> &CostSpec {
        &self.spec
    }

    pub fn marginals(&self) -> &[DiscreteMeasure] {
        &self.marginals
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn log_scalings(&self) -> &[Vec<f64>] {
        &self.log_scalings
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn set_budget(&mut self, budget: u64) {
        self.budget = budget;
    }

    pub fn n(&self) -> usize {
        self.marginals.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.marginals.iter().map(|m| m.len()).collect()
    }

    /// Number of multi-indices in the full product grid.
    pub fn index_count(&self) -> u128 {
        self.marginals.iter().map(|m| m.len() as u128).product()
    }

    pub fn check_budget(&self) -> Result<()> {
        let required = self.index_count();
        if required > self.budget as u128 {
            return Err(Error::BudgetExceeded { required, budget: self.budget });
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<&[f64]> {
        self.marginals.iter().map(|m| m.grid().centers()).collect()
    }

    pub fn cost_scale(&self) -> f64 {
        let grids: Vec<_> = self.marginals.iter().map(|m| m.grid()).collect();
        cost_scale(&self.spec, &grids)
    }

    /// `log` of one coupling entry; `-inf` for structurally zero entries.
    pub fn log_coupling(&self, index: &[usize]) -> Result<f64> {
        let pts = self.index_points(index)?;
        let c = self.spec.eval_unchecked(&pts);
        if c == f64::INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        let s: f64 = index.iter().enumerate().map(|(i, &j)| self.log_scalings[i][j]).sum();
        Ok((s - c) / self.epsilon)
    }

    pub fn coupling(&self, index: &[usize]) -> Result<f64> {
        Ok(self.log_coupling(index)?.exp())
    }

    pub(crate) fn index_points(&self, index: &[usize]) -> Result<Vec<f64>> {
        if index.len() != self.n() {
            return Err(Error::Arity { expected: self.n(), got: index.len() });
        }
        index
            .iter()
            .zip(&self.marginals)
            .map(|(&j, m)| {
                if j < m.len() {
                    Ok(m.grid().center(j))
                } else {
                    Err(Error::InvalidArgument(format!("index {j} out of range for grid of size {}", m.len())))
                }
            })
            .collect()
    }

    pub(crate) fn kernel(&self, use_tables: bool) -> LogKernel<'_> {
        LogKernel::new(&self.spec, self.points(), self.epsilon, use_tables)
    }

    fn default_log_domain(&self) -> bool {
        self.epsilon < LOG_DOMAIN_RATIO * self.cost_scale()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub sweeps: usize,
    pub marginal_errors: Vec<f64>,
    pub primal_cost: f64,
    pub entropy: f64,
    pub kl_objective: f64,
    pub dual_value: f64,
    pub dual_feasibility_violation: f64,
    pub duality_gap: f64,
    pub converged: bool,
    pub epsilon: f64,
    pub log_domain: bool,
    /// `(sweep, kl_objective)` samples when tracing was requested.
    pub kl_trace: Vec<(usize, f64)>,
    pub runtime_ms: u128,
}

impl SolveReport {
    pub fn max_marginal_error(&self) -> f64 {
        self.marginal_errors.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimalReport {
    pub primal_cost: f64,
    /// `sum gamma log gamma`; non-positive for a probability coupling.
    pub entropy: f64,
    /// `KL(gamma | exp(-c/eps))`, equal to `entropy + primal_cost / eps`.
    pub kl_objective: f64,
    pub total_mass: f64,
    /// `max (sum_i u_i - c)`, possibly negative.
    pub max_slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualReport {
    pub potentials: Vec<Vec<f64>>,
    /// Potentials shifted down by `violation / n`; these satisfy the dual
    /// constraint at every multi-index.
    pub shifted_potentials: Vec<Vec<f64>>,
    pub dual_value: f64,
    pub violation: f64,
}

/// `exp(-c/eps)` at the given points; exactly zero where the cost is infinite.
pub fn gibbs_weight(spec: &CostSpec, epsilon: f64, points: &[f64]) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidOptions(format!("epsilon must be positive, got {epsilon}")));
    }
    let c = spec.eval(points)?.value();
    Ok((-c / epsilon).exp())
}

/// `S_k[j]`: sum over all indices with `j_k = j` of the Gibbs weight times the
/// other scalings. May underflow to zero where [`contract_log`] does not.
pub fn contract(state: &ScalingState, k: usize) -> Result<Vec<f64>> {
    Ok(contract_log(state, k)?.into_iter().map(f64::exp).collect())
}

/// `log S_k`, accumulated with a max-shifted log-sum-exp.
pub fn contract_log(state: &ScalingState, k: usize) -> Result<Vec<f64>> {
    if k >= state.n() {
        return Err(Error::InvalidArgument(format!("marginal index {k} out of range for n = {}", state.n())));
    }
    state.check_budget()?;
    Ok(state.kernel(true).contract_log(&state.log_scalings, k, true))
}

pub fn ipfp_solve(spec: &CostSpec, marginals: &[DiscreteMeasure], opts: &SolveOptions) -> Result<(ScalingState, SolveReport)> {
    opts.validate()?;
    match &opts.anneal {
        Some(warmup) => {
            let mut schedule: Vec<f64> = warmup.iter().copied().filter(|&e| e > opts.epsilon).collect();
            schedule.push(opts.epsilon);
            anneal_solve(spec, marginals, &schedule, opts)
        }
        None => {
            let state = ScalingState::new(spec, marginals, opts.epsilon)?;
            solve_from(state, opts)
        }
    }
}

/// Continue sweeping from the potentials already held by `state`, at the
/// state's own temperature. `opts.epsilon` and `opts.anneal` are ignored.
pub fn solve_from(mut state: ScalingState, opts: &SolveOptions) -> Result<(ScalingState, SolveReport)> {
    let start = Instant::now();
    state.budget = opts.budget;
    state.check_budget()?;
    let n = state.n();
    let eps = state.epsilon;
    let log_domain = opts.log_domain.unwrap_or_else(|| state.default_log_domain());
    log::debug!(
        "solving {} n={} sizes={:?} eps={} log_domain={}",
        state.spec.family().name(),
        n,
        state.sizes(),
        eps,
        log_domain
    );

    let kernel = state.kernel(true);
    let weights: Vec<Vec<f64>> = state.marginals.iter().map(|m| m.weights().to_vec()).collect();
    let mut u = state.log_scalings.clone();
    let mut errors = vec![f64::INFINITY; n];
    let mut sweeps = 0;
    let mut converged = false;
    let mut kl_trace = Vec::new();

    while sweeps < opts.max_sweeps {
        sweeps += 1;
        for k in 0..n {
            let ls = kernel.contract_log(&u, k, log_domain);
            errors[k] = block_update(&mut u[k], &ls, &weights[k], eps, k)?;
        }
        if let Some(every) = opts.trace_every {
            if sweeps % every == 0 {
                let probe = ScalingState { log_scalings: u.clone(), ..state.clone() };
                let kl = primal_pass(&probe).kl_objective;
                log::debug!("sweep {sweeps}: kl {kl:.12e}, errors {errors:?}");
                kl_trace.push((sweeps, kl));
            }
        }
        let worst = errors.iter().copied().fold(0.0, f64::max);
        if worst < opts.tol {
            converged = true;
            break;
        }
    }
    drop(kernel);
    state.log_scalings = u;
    if !converged {
        log::warn!("no convergence after {sweeps} sweeps at eps={eps}, errors {errors:?}");
    }

    let primal = primal_pass(&state);
    let dual = dual_from(&state, primal.max_slack);
    let report = SolveReport {
        sweeps,
        marginal_errors: errors,
        primal_cost: primal.primal_cost,
        entropy: primal.entropy,
        kl_objective: primal.kl_objective,
        dual_value: dual.dual_value,
        dual_feasibility_violation: dual.violation,
        duality_gap: primal.primal_cost - dual.dual_value,
        converged,
        epsilon: eps,
        log_domain,
        kl_trace,
        runtime_ms: start.elapsed().as_millis(),
    };
    Ok((state, report))
}

/// Set `u_k` so that block `k` matches its marginal exactly. Returns the L1
/// marginal error measured before the update.
fn block_update(uk: &mut [f64], log_s: &[f64], mu: &[f64], eps: f64, k: usize) -> Result<f64> {
    let mut err = 0.0;
    for (j, ((u, &ls), &w)) in uk.iter_mut().zip(log_s).zip(mu).enumerate() {
        let current = if *u == f64::NEG_INFINITY || ls == f64::NEG_INFINITY {
            0.0
        } else {
            (*u / eps + ls).exp()
        };
        err += (current - w).abs();
        if w <= 0.0 {
            *u = f64::NEG_INFINITY;
        } else if ls == f64::NEG_INFINITY {
            return Err(Error::Infeasible { marginal: k, index: j });
        } else {
            *u = eps * (w.ln() - ls);
        }
    }
    Ok(err)
}

pub fn primal_report(state: &ScalingState) -> Result<PrimalReport> {
    state.check_budget()?;
    Ok(primal_pass(state))
}

pub fn dual_report(state: &ScalingState) -> Result<DualReport> {
    state.check_budget()?;
    let slack = primal_pass(state).max_slack;
    Ok(dual_from(state, slack))
}

#[derive(Clone, Copy)]
struct Partial {
    cost: f64,
    entropy: f64,
    mass: f64,
    max_log: f64,
}

fn primal_pass(state: &ScalingState) -> PrimalReport {
    let kernel = state.kernel(false);
    let n = state.n();
    let eps = state.epsilon;
    let inv_eps = 1.0 / eps;
    let u = &state.log_scalings;
    let inner = n - 1;
    let sizes = state.sizes();

    let partials: Vec<Partial> = (0..sizes[0])
        .into_par_iter()
        .map(|j0| {
            let mut p = Partial { cost: 0.0, entropy: 0.0, mass: 0.0, max_log: f64::NEG_INFINITY };
            kernel.for_each_row(
                &[(0, j0)],
                |idx, row| {
                    let shift: f64 = (0..inner).map(|a| u[a][idx[a]] * inv_eps).sum();
                    for (j, &g) in row.iter().enumerate() {
                        let lg = shift + u[inner][j] * inv_eps + g;
                        if lg == f64::NEG_INFINITY {
                            continue;
                        }
                        if lg > p.max_log {
                            p.max_log = lg;
                        }
                        let gamma = lg.exp();
                        if gamma > 0.0 {
                            p.cost += -g * eps * gamma;
                            p.entropy += gamma * lg;
                            p.mass += gamma;
                        }
                    }
                },
                None,
                None,
            );
            p
        })
        .collect();

    let mut total = Partial { cost: 0.0, entropy: 0.0, mass: 0.0, max_log: f64::NEG_INFINITY };
    for p in partials {
        total.cost += p.cost;
        total.entropy += p.entropy;
        total.mass += p.mass;
        total.max_log = total.max_log.max(p.max_log);
    }
    PrimalReport {
        primal_cost: total.cost,
        entropy: total.entropy,
        kl_objective: total.entropy + total.cost * inv_eps,
        total_mass: total.mass,
        max_slack: eps * total.max_log,
    }
}

fn dual_from(state: &ScalingState, max_slack: f64) -> DualReport {
    let n = state.n() as f64;
    let violation = max_slack.max(0.0);
    let shifted: Vec<Vec<f64>> = state
        .log_scalings
        .iter()
        .map(|u| u.iter().map(|&v| v - violation / n).collect())
        .collect();
    let mut dual_value = 0.0;
    for (uh, mu) in shifted.iter().zip(&state.marginals) {
        for (&v, &w) in uh.iter().zip(mu.weights()) {
            if w > 0.0 {
                dual_value += v * w;
            }
        }
    }
    DualReport { potentials: state.log_scalings.clone(), shifted_potentials: shifted, dual_value, violation }
}

/// Solve at each temperature of `schedule` in turn, starting every stage from
/// the potentials of the previous one.
pub fn anneal_solve(
    spec: &CostSpec,
    marginals: &[DiscreteMeasure],
    schedule: &[f64],
    opts: &SolveOptions,
) -> Result<(ScalingState, SolveReport)> {
    anneal_solve_with(spec, marginals, schedule, opts, |_, _| {})
}

/// [`anneal_solve`] with a callback receiving every stage's result.
pub fn anneal_solve_with<F>(
    spec: &CostSpec,
    marginals: &[DiscreteMeasure],
    schedule: &[f64],
    opts: &SolveOptions,
    mut on_stage: F,
) -> Result<(ScalingState, SolveReport)>
where
    F: FnMut(&ScalingState, &SolveReport),
{
    check_schedule(schedule)?;
    let mut state = ScalingState::new(spec, marginals, schedule[0])?;
    let mut last = None;
    for &eps in schedule {
        state.epsilon = eps;
        let (next, report) = solve_from(state, opts)?;
        log::info!("stage eps={eps}: {} sweeps, cost {:.9}", report.sweeps, report.primal_cost);
        on_stage(&next, &report);
        state = next;
        last = Some(report);
    }
    Ok((state, last.expect("schedule is nonempty")))
}
