use thiserror::Error;

/// Errors raised by the library.
///
/// Each mathematical precondition that can fail has its own variant so that
/// callers (the command-line front end in particular) can tell a malformed
/// request apart from a legitimate but degenerate coloring.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid braid: {0}")]
    InvalidBraid(String),

    #[error("degenerate character: kappa = 0")]
    DegenerateCharacter,

    #[error("inadmissible element: (1,1) entry vanishes")]
    InadmissibleElement,

    #[error("inadmissible tuple: partial product {index} has vanishing (1,1) entry")]
    InadmissibleTuple { index: usize },

    #[error("inadmissible crossing at letter {position}")]
    InadmissibleCrossing { position: usize },

    #[error("singular meridian: color {index} has trace 2")]
    SingularMeridian { index: usize },

    #[error("singular total holonomy: trace of g_n...g_1 is 2")]
    SingularTotalHolonomy,

    #[error("not a colored closure: colors are not fixed by the braid (residual {residual:.3e})")]
    NotClosure { residual: f64 },

    #[error("no admissible gauge found after {attempts} attempts")]
    NoAdmissibleGauge { attempts: usize },

    #[error("no simple module: character is singular (mu = +-1)")]
    NoSimpleModule,

    #[error("fractional eigenvalue mu does not match the character (residual {residual:.3e})")]
    BadFractionalEigenvalue { residual: f64 },

    #[error("crossing at localization locus: braiding image of K (x) 1 is singular")]
    LocalizationLocus,

    #[error("braiding not unique/found: nullspace dimension {dim}, smallest singular values {tail:?}")]
    BraidingNotUnique { dim: usize, tail: Vec<f64> },

    #[error("normalization failure: invariant vector image vanishes")]
    NormalizationFailure,

    #[error("trace not scalar: first factor not simple or map not equivariant (residual {residual:.3e})")]
    TraceNotScalar { residual: f64 },

    #[error("trace lift could not be solved (residual {residual:.3e})")]
    LiftFailed { residual: f64 },

    #[error("closure solve did not converge (best residual {residual:.3e})")]
    ClosureSolveFailed { residual: f64 },

    #[error("exterior algebra too large: N = {0} exceeds 12")]
    TooLarge(usize),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wrap an error with a short description of the step that failed.
    pub fn context(self, context: impl Into<String>) -> Error {
        Error::Context { context: context.into(), source: Box::new(self) }
    }

    /// Strip context wrappers and return the innermost error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
