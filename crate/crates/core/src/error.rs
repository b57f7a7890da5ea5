use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates its domain. `name` is the user-facing parameter
    /// name so frontends can point at the offending flag.
    #[error("invalid value for `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The filtered series is identically zero on the whole grid.
    #[error("series produced no usable samples on the grid: {0}")]
    NonConvergent(String),

    /// The series configuration cannot deliver the requested accuracy.
    #[error("series configuration too weak: {0}")]
    Config(String),

    #[error("linear system could not be solved: {0}")]
    SingularSystem(String),

    #[error("magnitude never crosses the -3 dB line from above in the sampled range")]
    NoCrossing,

    /// Node-doubling check of the contour quadrature failed.
    #[error(
        "contour quadrature unstable at t = {t}: {nodes} nodes gave {coarse:e}, {check_nodes} nodes gave {fine:e}"
    )]
    ContourFailure {
        t: f64,
        nodes: usize,
        check_nodes: usize,
        coarse: f64,
        fine: f64,
    },

    #[error("sample grids do not match")]
    GridMismatch,

    #[error("optimizer stalled: {0}")]
    OptimizerStall(String),

    #[error("response never reaches {eta} of its final value")]
    NotReached { eta: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
