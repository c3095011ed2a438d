use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("Green tensor is singular at r = 0")]
    SingularPoint,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("tweezer foci {0} and {1} coincide")]
    CoincidentFoci(usize, usize),

    #[error("particles {0} and {1} overlap")]
    Overlap(usize, usize),

    #[error("validation gate failed: {0}")]
    Gate(String),

    #[error("far-field gate cannot be met at n = {requested}; smallest admissible n is {minimal}")]
    FarFieldOrder { requested: u32, minimal: u32 },

    #[error("quadrature did not converge: estimated relative error {estimate:.3e} > {tolerance:.1e}")]
    QuadratureNotConverged { estimate: f64, tolerance: f64 },

    #[error("finite-difference estimate did not converge (last change {change:.3e})")]
    DerivativeNotConverged { change: f64 },

    #[error("model is not Hurwitz stable: eigenvalue {re:.6e} {im:+.6e}i")]
    Unstable { re: f64, im: f64 },

    #[error("matrix is not positive semidefinite: minimum eigenvalue {0:.3e}")]
    NotPositiveSemidefinite(f64),

    #[error("matrix is singular (condition estimate {0:.3e})")]
    Singular(f64),

    #[error("time step {dt:.3e} s exceeds the stability bound {bound:.3e} s")]
    TimeStep { dt: f64, bound: f64 },

    #[error("empty averaging window")]
    EmptyWindow,

    #[error("degenerate result: {0}")]
    Degenerate(String),
}

impl Error {
    /// True for failures of a numerical procedure (instability, non-convergence,
    /// singular systems), as opposed to invalid input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::QuadratureNotConverged { .. }
                | Error::DerivativeNotConverged { .. }
                | Error::Unstable { .. }
                | Error::NotPositiveSemidefinite(_)
                | Error::Singular(_)
                | Error::Degenerate(_)
        )
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
