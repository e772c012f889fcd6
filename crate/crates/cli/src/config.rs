//! Experiment configuration files.
//!
//! A config is a TOML document:
//!
//! ```toml
//! name = "coulomb_n3_cosine"
//! figure = "Coulomb cost, N = 3: pair projection"
//! description = "free text"
//! warning = "optional, printed before the run"
//!
//! [cost]
//! family = "coulomb"      # coulomb | log | harmonic-sum | harmonic-pairwise
//!                         # penalized-harmonic | carlier | det-radial
//! n = 3
//! s = 1.0                 # coulomb exponent, default 1
//! tau = 0.1               # penalized-harmonic only
//!
//! [[marginals]]           # one entry is reused for every marginal
//! density = "cosine"
//! params = [5.0]
//! lo = -5.0
//! hi = 5.0
//! m = 200
//!
//! [solver]
//! epsilon = 0.02
//! anneal = [0.1, 0.05]    # optional warm-up temperatures, decreasing
//! tol = 1e-8
//! max_sweeps = 10000
//! budget = 100000000
//! log_domain = true       # optional, chosen from the cost scale otherwise
//!
//! [[outputs]]
//! kind = "pair_projection"
//! i = 0
//! j = 1
//! ```
//!
//! Output kinds: `report`, `pair_projection` (`i`, `j`), `support` (`eta`,
//! `i`, `j`), `oracle_compare` (`oracle`) and `stage_supports` (`eta`, `i`,
//! `j`).

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use mmot::costs::{CostFamily, CostSpec};
use mmot::ipfp::{SolveOptions, DEFAULT_BUDGET};
use mmot::measures::{make_density, DiscreteMeasure, Grid1D};
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] mmot::Error),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub figure: String,
    #[serde(default)]
    pub description: String,
    pub warning: Option<String>,
    pub cost: CostConfig,
    pub marginals: Vec<MarginalConfig>,
    pub solver: SolverConfig,
    #[serde(default)]
    pub outputs: Vec<OutputSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostConfig {
    pub family: String,
    pub n: usize,
    pub s: Option<f64>,
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginalConfig {
    pub density: String,
    #[serde(default)]
    pub params: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
    pub m: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub anneal: Option<Vec<f64>>,
    pub tol: Option<f64>,
    pub max_sweeps: Option<usize>,
    pub budget: Option<u64>,
    pub log_domain: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OutputSpec {
    Report,
    PairProjection { i: usize, j: usize },
    Support { eta: f64, i: usize, j: usize },
    OracleCompare { oracle: OracleId },
    StageSupports { eta: f64, i: usize, j: usize },
}

/// Closed-form references a run can be compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(try_from = "String")]
pub enum OracleId {
    CoulombCyclic,
    Seidl,
    AntiMonotone,
    HarmonicPairMaps,
    FlatPlan,
    DetRadial,
    Carlier,
}

impl OracleId {
    pub const ALL: [OracleId; 7] = [
        OracleId::CoulombCyclic,
        OracleId::Seidl,
        OracleId::AntiMonotone,
        OracleId::HarmonicPairMaps,
        OracleId::FlatPlan,
        OracleId::DetRadial,
        OracleId::Carlier,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OracleId::CoulombCyclic => "coulomb-cyclic",
            OracleId::Seidl => "seidl",
            OracleId::AntiMonotone => "anti-monotone",
            OracleId::HarmonicPairMaps => "harmonic-pair-maps",
            OracleId::FlatPlan => "flat-plan",
            OracleId::DetRadial => "det-radial",
            OracleId::Carlier => "carlier",
        }
    }

    /// Whether the oracle describes optimal plans for `spec`.
    pub fn supports(self, spec: &CostSpec) -> bool {
        let n = spec.n();
        match (self, spec.family()) {
            (OracleId::CoulombCyclic | OracleId::Seidl, CostFamily::Coulomb { .. } | CostFamily::LogRepulsive) => true,
            (OracleId::AntiMonotone, CostFamily::HarmonicSum | CostFamily::HarmonicPairwise) => n == 2,
            (OracleId::HarmonicPairMaps, CostFamily::HarmonicSum | CostFamily::PenalizedHarmonic { .. }) => n == 3,
            (OracleId::FlatPlan, CostFamily::HarmonicSum | CostFamily::HarmonicPairwise) => true,
            (OracleId::FlatPlan, CostFamily::PenalizedHarmonic { .. }) => true,
            (OracleId::DetRadial, CostFamily::DetRadialProduct) => true,
            (OracleId::Carlier, CostFamily::CarlierOscillation) => n == 2,
            _ => false,
        }
    }
}

impl fmt::Display for OracleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OracleId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OracleId::ALL
            .into_iter()
            .find(|o| o.as_str() == s)
            .ok_or_else(|| format!("unknown oracle id {s:?}"))
    }
}

impl TryFrom<String> for OracleId {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Command-line overrides applied on top of a config.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub epsilon: Option<f64>,
    pub grid_size: Option<usize>,
    pub tol: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        if let Some(eps) = o.epsilon {
            self.solver.epsilon = eps;
            // warm-up stages at or below the new target are dropped by the solver
        }
        if let Some(m) = o.grid_size {
            for mc in &mut self.marginals {
                mc.m = m;
            }
        }
        if let Some(tol) = o.tol {
            self.solver.tol = Some(tol);
        }
        self.validate()
    }

    /// Check everything that can be checked without solving, including the
    /// evaluation budget.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.trim().is_empty() {
            return invalid("name must not be empty");
        }
        let spec = self.cost_spec()?;
        let marginals = self.marginals()?;
        self.solve_options().validate()?;
        if let Some(mc) = self.marginals.iter().find(|mc| mc.m == 0) {
            return invalid(format!("grid for density {} has no cells", mc.density));
        }
        for out in &self.outputs {
            match *out {
                OutputSpec::Report => {}
                OutputSpec::PairProjection { i, j } => self.check_pair(i, j)?,
                OutputSpec::Support { eta, i, j } | OutputSpec::StageSupports { eta, i, j } => {
                    self.check_pair(i, j)?;
                    if !(eta > 0.0 && eta < 1.0) {
                        return invalid(format!("support eta must lie in (0, 1), got {eta}"));
                    }
                }
                OutputSpec::OracleCompare { oracle } => {
                    if !oracle.supports(&spec) {
                        return invalid(format!("oracle {oracle} does not apply to the {} cost with n = {}", spec.family().name(), spec.n()));
                    }
                    let needs_identical = matches!(oracle, OracleId::CoulombCyclic | OracleId::Seidl | OracleId::HarmonicPairMaps);
                    if needs_identical && marginals.windows(2).any(|w| w[0] != w[1]) {
                        return invalid(format!("oracle {oracle} needs identical marginals"));
                    }
                }
            }
        }
        let cells: u128 = marginals.iter().map(|m| m.len() as u128).product();
        let budget = self.solve_options().budget;
        if cells > budget as u128 {
            return Err(mmot::Error::BudgetExceeded { required: cells, budget }.into());
        }
        Ok(())
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<(), ConfigError> {
        let n = self.cost.n;
        if i >= n || j >= n || i == j {
            return invalid(format!("pair ({i}, {j}) needs two distinct marginals below n = {n}"));
        }
        Ok(())
    }

    pub fn cost_spec(&self) -> Result<CostSpec, ConfigError> {
        let c = &self.cost;
        let family = match c.family.as_str() {
            "coulomb" => CostFamily::Coulomb { s: c.s.unwrap_or(1.0) },
            "log" | "log-repulsive" => CostFamily::LogRepulsive,
            "harmonic-sum" => CostFamily::HarmonicSum,
            "harmonic-pairwise" => CostFamily::HarmonicPairwise,
            "penalized-harmonic" => match c.tau {
                Some(tau) => CostFamily::PenalizedHarmonic { tau },
                None => return invalid("penalized-harmonic needs tau"),
            },
            "carlier" | "carlier-oscillation" => CostFamily::CarlierOscillation,
            "det-radial" | "det-radial-product" => CostFamily::DetRadialProduct,
            other => return invalid(format!("unknown cost family {other:?}")),
        };
        if c.s.is_some() && !matches!(family, CostFamily::Coulomb { .. }) {
            return invalid("s only applies to the coulomb cost");
        }
        if c.tau.is_some() && !matches!(family, CostFamily::PenalizedHarmonic { .. }) {
            return invalid("tau only applies to the penalized-harmonic cost");
        }
        Ok(CostSpec::new(family, c.n)?)
    }

    /// One discretised measure per marginal.
    pub fn marginals(&self) -> Result<Vec<DiscreteMeasure>, ConfigError> {
        let n = self.cost.n;
        let specs: Vec<&MarginalConfig> = match self.marginals.len() {
            1 => vec![&self.marginals[0]; n],
            k if k == n => self.marginals.iter().collect(),
            k => return invalid(format!("expected 1 or {n} marginals, got {k}")),
        };
        specs
            .into_iter()
            .map(|mc| {
                let grid = Grid1D::new(mc.lo, mc.hi, mc.m)?;
                Ok(make_density(&mc.density, &mc.params, &grid)?)
            })
            .collect()
    }

    pub fn solve_options(&self) -> SolveOptions {
        let s = &self.solver;
        let mut opts = SolveOptions::new(s.epsilon).budget(s.budget.unwrap_or(DEFAULT_BUDGET));
        if let Some(tol) = s.tol {
            opts = opts.tol(tol);
        }
        if let Some(k) = s.max_sweeps {
            opts = opts.max_sweeps(k);
        }
        if let Some(on) = s.log_domain {
            opts = opts.log_domain(on);
        }
        if let Some(a) = &s.anneal {
            opts = opts.anneal(a.clone());
        }
        opts
    }

    /// Temperatures the solver visits, in order.
    pub fn schedule(&self) -> Vec<f64> {
        let eps = self.solver.epsilon;
        let mut out: Vec<f64> = self.solver.anneal.iter().flatten().copied().filter(|&e| e > eps).collect();
        out.push(eps);
        out
    }
}
