use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid axis label `{0}` (expected one of 0, x, y, z)")]
    InvalidAxis(String),

    #[error("site {site} out of range for {n_qubits} qubit(s)")]
    SiteOutOfRange { site: usize, n_qubits: usize },

    #[error("control point has {got} entries, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid system configuration: {0}")]
    InvalidConfig(String),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("steady state is not unique: kernel dimension {dim}")]
    DegenerateKernel { dim: usize },

    #[error("traceless solve received an input with trace {0:e}")]
    NotTraceless(f64),

    #[error("Lindbladian restricted to the traceless subspace is singular (kernel dimension {dim})")]
    SingularRestricted { dim: usize },

    #[error("superoperators are expressed in different frames")]
    BasisMismatch,

    #[error("quadrature did not converge: {value:e} with n nodes vs {doubled:e} with 2n (relative change {relative:e})")]
    QuadratureNotConverged {
        value: f64,
        doubled: f64,
        relative: f64,
    },

    #[error("metric quadratic form is negative ({value:e}) at t = {t}")]
    NegativeMetric { t: f64, value: f64 },

    #[error("protocol leaves the field-map grid near ({bx}, {bz})")]
    OutsideGrid { bx: f64, bz: f64 },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("second-order energy balance violated: W + ΣQ = {residual:e} (relative {relative:e})")]
    BalanceViolation { residual: f64, relative: f64 },

    #[error("all relaxation rates vanish; current fractions are undefined")]
    NoCoupling,

    #[error("{0}")]
    Unsupported(String),

    #[error("at control point {point:?}: {source}")]
    AtPoint {
        point: Vec<f64>,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(self, point: &[f64]) -> Self {
        match self {
            e @ Error::AtPoint { .. } => e,
            e => Error::AtPoint {
                point: point.to_vec(),
                source: Box::new(e),
            },
        }
    }

    /// The underlying error with point context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtPoint { source, .. } => source.root(),
            e => e,
        }
    }

    /// True for failures of the numerical machinery (as opposed to bad input
    /// or a violated thermodynamic invariant).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            Error::DegenerateKernel { .. }
                | Error::SingularRestricted { .. }
                | Error::NotTraceless(_)
                | Error::QuadratureNotConverged { .. }
                | Error::NegativeMetric { .. }
                | Error::NoCoupling
        )
    }

    /// True when a thermodynamic identity checked by the engine failed.
    pub fn is_invariant_violation(&self) -> bool {
        matches!(self.root(), Error::BalanceViolation { .. })
    }
}
