use std::fs;
use std::path::{Path, PathBuf};

use mmot::analysis::{graph_union_concentration, project_pair, threshold_support, PairProjection};
use mmot::costs::{pairwise_sum_offset, CostFamily, CostSpec};
use mmot::ipfp::{anneal_solve_with, ScalingState, SolveReport};
use mmot::measures::DiscreteMeasure;
use mmot::oracles::{
    coulomb_cyclic_map, det_radial_solution, flat_plan_value, harmonic_pair_maps, map_plan_cost, seidl_radial_map, Map1D,
};

use crate::config::{ConfigError, ExperimentConfig, OracleId, OutputSpec};
use crate::output::{heatmap_pgm, mask_pgm, matrix_csv, Report};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("solver failed: {0}")]
    Solver(#[from] mmot::Error),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl RunError {
    /// 2 for budget refusals, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(ConfigError::Model(mmot::Error::BudgetExceeded { .. }))
            | RunError::Solver(mmot::Error::BudgetExceeded { .. }) => 2,
            _ => 1,
        }
    }
}

/// One annealing stage, with the projections requested by `stage_supports`.
#[derive(Debug, Clone)]
pub struct Stage {
    pub report: SolveReport,
    pub projections: Vec<((usize, usize), PairProjection)>,
}

/// A finished solve, before anything is written.
#[derive(Debug)]
pub struct Execution {
    pub config: ExperimentConfig,
    pub spec: CostSpec,
    pub marginals: Vec<DiscreteMeasure>,
    pub state: ScalingState,
    pub report: SolveReport,
    pub stages: Vec<Stage>,
}

pub fn execute(config: &ExperimentConfig) -> Result<Execution, RunError> {
    config.validate()?;
    let spec = config.cost_spec()?;
    let marginals = config.marginals()?;
    let opts = config.solve_options();
    let stage_pairs: Vec<(usize, usize)> = config
        .outputs
        .iter()
        .filter_map(|o| match *o {
            OutputSpec::StageSupports { i, j, .. } => Some((i, j)),
            _ => None,
        })
        .collect();
    let mut stages = Vec::new();
    let mut stage_err = None;
    let (state, report) = anneal_solve_with(&spec, &marginals, &config.schedule(), &opts, |st, rep| {
        let mut projections = Vec::new();
        for &(i, j) in &stage_pairs {
            match project_pair(st, i, j) {
                Ok(p) => projections.push(((i, j), p)),
                Err(e) => stage_err = Some(e),
            }
        }
        stages.push(Stage { report: rep.clone(), projections });
    })?;
    if let Some(e) = stage_err {
        return Err(e.into());
    }
    Ok(Execution { config: config.clone(), spec, marginals, state, report, stages })
}

/// A set of graphs the `(i, j)` projection should concentrate on.
#[derive(Debug, Clone)]
pub struct GraphRef {
    pub i: usize,
    pub j: usize,
    pub label: String,
    pub maps: Vec<Map1D>,
}

/// What an oracle predicts for a run.
#[derive(Debug, Clone)]
pub struct OracleReference {
    pub oracle: OracleId,
    /// Cost of the predicted plan in the run's own cost convention.
    pub cost: f64,
    /// `cost` is only a lower bound on the optimum.
    pub lower_bound: bool,
    pub graphs: Vec<GraphRef>,
}

fn graph(i: usize, j: usize, label: &str, maps: Vec<Map1D>) -> GraphRef {
    GraphRef { i, j, label: label.to_string(), maps }
}

/// `[T, T^2, ..., T^{n-1}]`.
fn powers(t: &Map1D, n: usize) -> Vec<Map1D> {
    (1..n).map(|k| t.iterate(k)).collect()
}

pub fn oracle_reference(
    oracle: OracleId,
    spec: &CostSpec,
    marginals: &[DiscreteMeasure],
) -> Result<OracleReference, mmot::Error> {
    if !oracle.supports(spec) {
        return Err(mmot::Error::InvalidArgument(format!(
            "oracle {oracle} does not apply to the {} cost with n = {}",
            spec.family().name(),
            spec.n()
        )));
    }
    let n = spec.n();
    let mu = &marginals[0];
    let plan = |maps: &[Map1D]| map_plan_cost(maps, spec, mu).map(|c| c.value);
    let reference = match oracle {
        OracleId::CoulombCyclic | OracleId::Seidl => {
            let t = if oracle == OracleId::CoulombCyclic { coulomb_cyclic_map(mu, n)? } else { seidl_radial_map(mu, n)? };
            let orbit = powers(&t, n);
            OracleReference {
                oracle,
                cost: plan(&orbit)?,
                lower_bound: false,
                graphs: vec![graph(0, 1, "T", vec![t]), graph(0, 1, "orbit", orbit)],
            }
        }
        OracleId::AntiMonotone => {
            let f1 = mu.cdf();
            let f2 = marginals[1].cdf();
            let domain = (mu.grid().lo(), mu.grid().hi());
            let t = Map1D::new("anti-monotone", domain, move |x| f2.quantile_continuous(1.0 - f1.cdf(x)))
                .with_piece(domain.0, domain.1, "F_2^-1(1 - F_1(x))");
            OracleReference { oracle, cost: plan(std::slice::from_ref(&t))?, lower_bound: false, graphs: vec![graph(0, 1, "T", vec![t])] }
        }
        OracleId::HarmonicPairMaps => {
            let (t, s) = harmonic_pair_maps();
            OracleReference {
                oracle,
                cost: plan(&[t.clone(), s.clone()])?,
                lower_bound: false,
                graphs: vec![graph(0, 1, "T", vec![t]), graph(0, 2, "S", vec![s])],
            }
        }
        OracleId::FlatPlan => {
            let sum = CostSpec::harmonic_sum(n)?;
            let mut value = flat_plan_value(&sum, marginals)?;
            if spec.family() == CostFamily::HarmonicPairwise {
                value -= pairwise_sum_offset(marginals);
            }
            OracleReference { oracle, cost: value, lower_bound: true, graphs: vec![] }
        }
        OracleId::DetRadial => {
            let sol = det_radial_solution(marginals)?;
            let graphs =
                sol.maps().iter().enumerate().map(|(k, h)| graph(0, k + 1, &format!("H{}", k + 2), vec![h.clone()])).collect();
            OracleReference { oracle, cost: sol.cost(), lower_bound: false, graphs }
        }
        OracleId::Carlier => {
            let domain = (mu.grid().lo(), mu.grid().hi());
            let id = Map1D::identity(domain);
            let neg = Map1D::new("negation", domain, |x| -x).with_piece(domain.0, domain.1, "-x");
            OracleReference { oracle, cost: 0.0, lower_bound: false, graphs: vec![graph(0, 1, "branches", vec![id, neg])] }
        }
    };
    Ok(reference)
}

/// Relative error against a nonzero reference, absolute error against zero.
pub fn relative_error(value: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        value.abs()
    } else {
        (value - reference).abs() / reference.abs()
    }
}

/// Files written by [`write_artifacts`].
#[derive(Debug, Clone, Default)]
pub struct RunArtifacts {
    pub report: PathBuf,
    pub matrices: Vec<PathBuf>,
    pub heatmaps: Vec<PathBuf>,
    pub converged: bool,
    pub summary: String,
}

fn write(path: &Path, text: &str) -> Result<(), RunError> {
    fs::write(path, text).map_err(|source| RunError::Io { path: path.display().to_string(), source })
}

/// Radius used for graph concentrations in reports: two cells of the target grid.
const REPORT_RADIUS_CELLS: f64 = 2.0;

pub fn write_artifacts(exec: &Execution, out_dir: &Path) -> Result<RunArtifacts, RunError> {
    let cfg = &exec.config;
    let dir = out_dir.join(&cfg.name);
    fs::create_dir_all(&dir).map_err(|source| RunError::Io { path: dir.display().to_string(), source })?;
    // the determinant problem is a maximization; the solver minimizes -prod r
    let maximize = exec.spec.family() == CostFamily::DetRadialProduct;
    let sign = if maximize { -1.0 } else { 1.0 };
    let mut rep = Report::from_solve(&cfg.name, &exec.report, maximize);
    let mut art = RunArtifacts { converged: exec.report.converged, ..Default::default() };
    let mut projections: Vec<((usize, usize), PairProjection)> = Vec::new();
    let mut projection = |i: usize, j: usize| -> Result<PairProjection, RunError> {
        if let Some((_, p)) = projections.iter().find(|(k, _)| *k == (i, j)) {
            return Ok(p.clone());
        }
        let p = project_pair(&exec.state, i, j)?;
        projections.push(((i, j), p.clone()));
        Ok(p)
    };

    for out in &cfg.outputs {
        match *out {
            OutputSpec::Report => {}
            OutputSpec::PairProjection { i, j } => {
                let p = projection(i, j)?;
                let csv = dir.join(format!("gamma_{i}{j}.csv"));
                let pgm = dir.join(format!("gamma_{i}{j}.pgm"));
                write(&csv, &matrix_csv(&p))?;
                write(&pgm, &heatmap_pgm(&p))?;
                art.matrices.push(csv);
                art.heatmaps.push(pgm);
            }
            OutputSpec::Support { eta, i, j } => {
                let p = projection(i, j)?;
                let s = threshold_support(&p, eta)?;
                let path = dir.join(format!("support_{i}{j}.pgm"));
                write(&path, &mask_pgm(&s))?;
                art.heatmaps.push(path);
                let key = format!("support.{i}-{j}");
                rep.push_f64(format!("{key}.eta"), eta);
                rep.push(format!("{key}.cells"), s.len().to_string());
                rep.push_f64(format!("{key}.mass"), s.mass());
                rep.push_f64(format!("{key}.width"), s.mean_row_width());
            }
            OutputSpec::StageSupports { eta, i, j } => {
                for (k, stage) in exec.stages.iter().enumerate() {
                    let Some((_, p)) = stage.projections.iter().find(|(key, _)| *key == (i, j)) else { continue };
                    let s = threshold_support(p, eta)?;
                    let path = dir.join(format!("stage{k}_support_{i}{j}.pgm"));
                    write(&path, &mask_pgm(&s))?;
                    art.heatmaps.push(path);
                    let key = format!("stage.{k}.{i}-{j}");
                    rep.push_f64(format!("{key}.epsilon"), stage.report.epsilon);
                    rep.push_f64(format!("{key}.cost"), stage.report.primal_cost);
                    rep.push(format!("{key}.sweeps"), stage.report.sweeps.to_string());
                    rep.push_f64(format!("{key}.width"), s.mean_row_width());
                }
            }
            OutputSpec::OracleCompare { oracle } => {
                let r = oracle_reference(oracle, &exec.spec, &exec.marginals)?;
                let key = format!("oracle.{oracle}");
                rep.push_f64(format!("{key}.cost"), sign * r.cost);
                if r.lower_bound {
                    rep.push(format!("{key}.lower_bound_holds"), (exec.report.primal_cost >= r.cost).to_string());
                } else {
                    rep.push_f64(format!("{key}.cost_rel_error"), relative_error(exec.report.primal_cost, r.cost));
                }
                for g in &r.graphs {
                    let p = projection(g.i, g.j)?;
                    let radius = REPORT_RADIUS_CELLS * p.grid_col().width();
                    rep.push_f64(
                        format!("{key}.concentration.{}-{}.{}", g.i, g.j, g.label),
                        graph_union_concentration(&p, &g.maps, radius),
                    );
                }
                for m in r.graphs.iter().flat_map(|g| &g.maps) {
                    for note in m.notes() {
                        rep.push(format!("{key}.note"), format!("{:?}", format!("{}: {note}", m.name())));
                    }
                }
            }
        }
    }

    art.report = dir.join("report.txt");
    write(&art.report, &rep.render())?;
    let r = &exec.report;
    art.summary = format!(
        "{}: cost={:.9} gap={:.3e} sweeps={} converged={}",
        cfg.name,
        sign * r.primal_cost, r.duality_gap, r.sweeps, r.converged
    );
    Ok(art)
}

/// Execute and write; the returned artifacts record whether the solver converged.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<RunArtifacts, RunError> {
    if let Some(w) = &config.warning {
        log::warn!("{}: {w}", config.name);
    }
    let exec = execute(config)?;
    write_artifacts(&exec, out_dir)
}
