use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid system: {0}")]
    InvalidSpec(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("constraint group {0} has no nonzero component")]
    ZeroGroup(usize),
    #[error("shooting failed to bracket w(0) in [{lo}, {hi}]")]
    ShootingBracket { lo: f64, hi: f64 },
    #[error("grid too small: w(r_max)/w(0) = {ratio:e}")]
    GridTooSmall { ratio: f64 },
    #[error("fit window [{lo}, {hi}] outside sampled range")]
    WindowOutsideRange { lo: f64, hi: f64 },
    #[error("fit window holds {got} points, need {need}")]
    TooFewPoints { got: usize, need: usize },
    #[error("fit residual {0:e} too large; window not asymptotic")]
    FitResidual(f64),
    #[error("translated support exits the grid (boundary mass {0:e})")]
    SupportExitsGrid(f64),
    #[error("overlap below quadrature noise for blocks {left:?} / {right:?}")]
    IndeterminateForce { left: alloc::vec::Vec<usize>, right: alloc::vec::Vec<usize> },
    #[error("projection infeasible: {0}")]
    ProjectionInfeasible(String),
    #[error("maximum iterations ({0}) reached")]
    MaxIterations(usize),
    #[error("eigensolver did not converge: {0}")]
    EigenNonConvergence(String),
    #[error("field is not critical: gradient norm {0:e}")]
    NotCritical(f64),
    #[error("flow diverged: {0}")]
    FlowDivergence(String),
    #[error("singular matrix")]
    Singular,
    #[error("not positive definite")]
    NotPositiveDefinite,
}
