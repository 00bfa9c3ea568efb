use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("operation requires dimension {expected}, got {got}")]
    Dimension { expected: String, got: usize },

    #[error("multiplier is not finite at frequency {xi:?}")]
    NonFiniteMultiplier { xi: [f64; 2] },

    #[error("frequency {xi:?} is not on the lattice")]
    OffLattice { xi: [f64; 2] },

    #[error("direction {omega:?} is not an exact grid direction")]
    InexactDirection { omega: [f64; 2] },

    #[error("invalid direction: {0}")]
    InvalidDirection(String),

    #[error("pairwise quadrature needs {pairs} pair evaluations, budget is {budget}")]
    CostBudget { pairs: u128, budget: u128 },

    #[error("non-finite state detected at t = {t}")]
    BlowUp { t: f64 },

    #[error("wrap guard tripped: boundary mass fraction {fraction:.3e} exceeds {limit:.1e}")]
    WrapGuard { fraction: f64, limit: f64 },

    #[error("frequency content reaches {needed} but Nyquist is {nyquist}")]
    Nyquist { needed: f64, nyquist: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("linear solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    SolverDiverged { residual: f64, iterations: usize },

    #[error("nonlinear fixed point did not converge at t = {t}: increment {increment:.3e}")]
    StepRejected { t: f64, increment: f64 },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("malformed record: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
