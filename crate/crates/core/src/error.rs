use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("axis {axis} out of range for a {dim}-dimensional grid")]
    AxisOutOfRange { axis: usize, dim: usize },

    #[error("non-finite value at node {node}")]
    NonFinite { node: usize },

    #[error("degenerate metric at node {node}: smallest eigenvalue {min_eigenvalue:e}, condition number {condition:e}")]
    DegenerateMetric {
        node: usize,
        min_eigenvalue: f64,
        condition: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimensions m={m}, n={n} are not admissible: m+n>2 is required")]
    InadmissibleDimensions { m: usize, n: usize },

    #[error("no real warping exponents for lambda={lambda} with m={m}: {reason}")]
    LambdaOutOfRange { m: usize, lambda: f64, reason: String },

    #[error("warping constants rejected: {0}")]
    Constants(String),

    #[error("field too large to materialize: {values} values (limit {limit})")]
    TooLarge { values: usize, limit: usize },

    #[error("flow halted at t={t}: metric degenerate at node {node}, smallest eigenvalue {min_eigenvalue:e}")]
    FlowDegenerate {
        t: f64,
        node: usize,
        min_eigenvalue: f64,
    },

    #[error("flow diverged at t={t}: oscillation of f = {oscillation:e} exceeds {limit:e}")]
    FlowDiverged { t: f64, oscillation: f64, limit: f64 },

    #[error("conjugate heat solution lost positivity at t={t}, node {node} (u = {value:e})")]
    NonPositiveDensity { t: f64, node: usize, value: f64 },
}
