use core::fmt;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A requested Fock level does not fit under the cutoff.
    CutoffExceeded { level: usize, cutoff: usize },
    /// The truncation discards more probability than allowed.
    CutoffTooSmall {
        cutoff: usize,
        required: usize,
        tail_mass: f64,
    },
    /// Operator and state dimensions disagree.
    ShapeError { expected: usize, found: usize },
    /// A correlation matrix does not have the sparsity pattern assumed by a
    /// closed form.
    MatrixStructureMismatch { q: usize, deviation: f64 },
    /// The quadrature grid does not reproduce unit normalization.
    NormalizationDrift { integral: f64, tolerance: f64 },
    /// No trailing window of the series is flat.
    NotSaturated,
    /// The least-squares normal matrix is singular.
    SingularJacobian,
    /// Too few points for the requested fit.
    InsufficientData { needed: usize, found: usize },
    /// A parameter is outside its admissible range.
    InvalidParameter(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::CutoffExceeded { level, cutoff } => {
                write!(f, "Fock level {level} does not fit under cutoff {cutoff}")
            }
            Error::CutoffTooSmall {
                cutoff,
                required,
                tail_mass,
            } => write!(
                f,
                "cutoff {cutoff} leaves tail mass {tail_mass:e}; at least {required} levels required"
            ),
            Error::ShapeError { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::MatrixStructureMismatch { q, deviation } => write!(
                f,
                "correlation matrix at q={q} deviates from the expected pattern by {deviation:e}"
            ),
            Error::NormalizationDrift {
                integral,
                tolerance,
            } => write!(
                f,
                "Wigner normalization {integral} outside 1 ± {tolerance:e}; refine the grid"
            ),
            Error::NotSaturated => f.write_str("series never settles within the window tolerance"),
            Error::SingularJacobian => f.write_str("singular Jacobian in least-squares fit"),
            Error::InsufficientData { needed, found } => {
                write!(f, "fit needs at least {needed} points, got {found}")
            }
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
