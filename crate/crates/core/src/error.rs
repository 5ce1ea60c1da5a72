use thiserror::Error;

/// Errors produced anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite sample {value} at node {node} (t = {t})")]
    NonFiniteSample { node: usize, t: f64, value: f64 },

    #[error("domain mismatch: [{a0}, {b0}] vs [{a1}, {b1}]")]
    DomainMismatch { a0: f64, b0: f64, a1: f64, b1: f64 },

    #[error("polynomial is identically zero")]
    ZeroPolynomial,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integrator step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    #[error("non-finite state encountered at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("matrix numerically singular at t = {t} (condition estimate {cond:.3e})")]
    SingularMatrix { t: f64, cond: f64 },

    #[error("data degree {degree} exceeds moment order {order}")]
    DegreeMismatch { degree: usize, order: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("moment matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },

    #[error("extracted atom at s = {s} lies outside [-1, 1]")]
    AtomOutsideDomain { s: f64 },

    #[error("Kepler iteration did not converge for t = {t}")]
    KeplerNoConvergence { t: f64 },

    #[error("unknown builtin problem `{0}`")]
    UnknownProblem(String),

    #[error("invalid override: {0}")]
    InvalidOverride(String),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("numerical failure in SDP solver: {0}")]
    Numerical(String),

    #[error("[{stage}] {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Wraps the error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Error {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    /// The innermost error, skipping stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
