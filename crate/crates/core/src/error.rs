use thiserror::Error;

/// Errors produced by the library.
///
/// Variants split into three coarse classes that callers (notably the CLI)
/// map onto distinct exit statuses: domain/precondition violations,
/// numerical-quality problems, and internal failures.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation received a parameter outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An argument violated an operation precondition (e.g. negative time).
    #[error("domain error: {0}")]
    Domain(String),

    /// The model is the all-zero process and the operation requires a
    /// nondegenerate one.
    #[error("degenerate model: nu = 0 and rho * ||g||_L1 = 0")]
    DegenerateModel,

    /// Adaptive quadrature stopped at the panel cap before reaching the
    /// requested tolerance.
    #[error("quadrature did not converge: achieved error {achieved:e}, requested {requested:e} over [{a}, {b}]")]
    QuadratureNoConvergence {
        achieved: f64,
        requested: f64,
        a: f64,
        b: f64,
    },

    /// The analytic tail-remainder bound could not be driven below target
    /// (e.g. a kernel with enormous support).
    #[error("tail remainder bound not achievable: achieved {achieved:e}, requested {requested:e}")]
    RemainderBound { achieved: f64, requested: f64 },

    /// Root finding failed to converge within the iteration cap.
    #[error("saddle point iteration did not converge for x = {x}: residual {residual:e} after {iterations} iterations")]
    SaddleNoConvergence {
        x: f64,
        residual: f64,
        iterations: usize,
    },

    /// Transform size too small for the requested horizon.
    #[error("transform size {m} too small: need at least {required} (suggest M = {suggested})")]
    TransformTooSmall {
        m: usize,
        required: f64,
        suggested: usize,
    },

    /// Operation not supported for this kernel shape.
    #[error("unsupported mode: {0}")]
    Unsupported(String),
}

impl Error {
    /// True for errors caused by out-of-domain inputs rather than by
    /// numerical breakdown.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::Domain(_)
                | Error::DegenerateModel
                | Error::TransformTooSmall { .. }
                | Error::Unsupported(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
