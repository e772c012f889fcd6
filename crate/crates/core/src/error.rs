use thiserror::Error;

/// Errors produced by grid construction, cost evaluation and the solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("unknown density `{0}`")]
    UnknownDensity(String),

    #[error("invalid density parameters for `{name}`: {reason}")]
    InvalidDensityParams { name: String, reason: String },

    #[error("invalid cost: {0}")]
    InvalidCost(String),

    #[error("cost expects {expected} points, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("invalid solver options: {0}")]
    InvalidOptions(String),

    /// The streamed multi-index count exceeds the configured budget.
    #[error("evaluation budget exceeded: {required} multi-index evaluations required, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u64 },

    /// A marginal puts mass on an index whose whole kernel slice vanishes.
    #[error("infeasible problem: marginal {marginal} has mass at index {index} but no admissible coupling entry")]
    Infeasible { marginal: usize, index: usize },

    /// A measure holds too much mass in one cell for a cyclic/radial map.
    #[error("measure is too concentrated: cell {cell} holds mass {mass} >= {limit}")]
    AtomicMeasure { cell: usize, mass: f64, limit: f64 },

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("invalid weight function: {0}")]
    InvalidWeightFunction(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
