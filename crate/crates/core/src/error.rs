use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Levy measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quadrature did not converge (estimated residual {residual:e})")]
    QuadratureNonConvergence { residual: f64 },

    #[error("exponential moment is infinite at xi = {xi}")]
    InfiniteMoment { xi: f64 },

    #[error("function is not convex near xi = {xi} (slope test failed)")]
    NonConvex { xi: f64 },

    #[error("diffusion coefficient {sigma} at x = {x} is below the minimum {sigma_min}")]
    DegenerateDiffusion { x: f64, sigma: f64, sigma_min: f64 },

    #[error("constraint infeasible on cells {cells:?}")]
    InfeasibleConstraint { cells: Vec<usize> },

    #[error("entropy tilt cannot reach target drift {target} on cell {cell}")]
    UnsolvableTilt { cell: usize, target: f64 },

    #[error("initial path has infinite action; shrink the endpoint gap")]
    InfiniteInitialAction,

    #[error("small-jump cutoff required: the Levy measure has infinite mass")]
    CutoffRequired,

    #[error("trajectory left the bound {bound} at step {step}")]
    Overflow { step: usize, bound: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("{pointer}: {message}")]
    Schema { pointer: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidMeasure(_)
                | Error::InvalidInput(_)
                | Error::Parse { .. }
                | Error::Schema { .. }
                | Error::GridMismatch(_)
                | Error::CutoffRequired
                | Error::DegenerateDiffusion { .. }
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}
