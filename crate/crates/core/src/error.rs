use core::fmt;

/// Errors raised by the solver stack.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Array length does not match the grid or the other operands.
    DimensionMismatch { expected: usize, found: usize },
    /// A zero pivot was met during elimination.
    SingularSystem { pivot: usize },
    /// A linear or nonlinear iteration stopped above its tolerance.
    NonConvergence { residual: f64 },
    /// An argument lies outside the domain of the operation.
    Domain { what: &'static str },
    /// The membrane touches (or crosses) the ground plate, `min(1 + u) <= 0`,
    /// or leaves the admissible region of an iteration.
    DegenerateGeometry { min_gap: f64 },
    /// The grid has too few nodes for the requested stencil.
    GridTooCoarse { nodes: usize, required: usize },
    /// Newton's method found no steady state for this voltage.
    NoSteadyState { lambda: f64, residual: f64 },
    /// A parameter violates its documented range.
    InvalidParameter { name: &'static str },
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Self::SingularSystem { pivot } => write!(f, "singular system at pivot {pivot}"),
            Self::NonConvergence { residual } => {
                write!(f, "iteration did not converge (residual {residual:e})")
            }
            Self::Domain { what } => write!(f, "domain error: {what}"),
            Self::DegenerateGeometry { min_gap } => {
                write!(f, "degenerate geometry: min(1 + u) = {min_gap}")
            }
            Self::GridTooCoarse { nodes, required } => {
                write!(f, "grid too coarse: {nodes} nodes, need at least {required}")
            }
            Self::NoSteadyState { lambda, residual } => {
                write!(f, "no steady state found at lambda = {lambda} (residual {residual:e})")
            }
            Self::InvalidParameter { name } => write!(f, "invalid parameter `{name}`"),
        }
    }
}

impl core::error::Error for Error {}
