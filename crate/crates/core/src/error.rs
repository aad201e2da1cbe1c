use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("monotonicity matrix needs rho > 0, got {0}")]
    NonPositiveDensity(f64),
    #[error("Legendre maximizer {q:?} lies on the q-grid boundary; enlarge the range")]
    LegendreBoundary { q: [f64; 2] },
}

#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("periodic boundary declared on only one {axis} edge")]
    PeriodicMismatch { axis: &'static str },
    #[error("field has {got} values, grid needs {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at cell {index}")]
    NonFinite { index: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("snapshot format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("eikonal right-hand side must be positive, got {value} at cell {index}")]
    NonPositiveSpeed { index: usize, value: f64 },
    #[error("no exit or inflow edge anchors the potential")]
    NoAnchor,
    #[error("linear system is singular: no Dirichlet edge and no mass shift")]
    SingularSystem,
    #[error("time step {dt} exceeds the stability limit {max_dt}")]
    Cfl { dt: f64, max_dt: f64 },
    #[error("density {value:e} at cell {index} is negative beyond round-off")]
    NegativeDensity { index: usize, value: f64 },
    #[error("non-finite particle position at index {index}")]
    NonFiniteParticle { index: usize },
    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Model(#[from] ModelError),
}
