use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Why an expression failed to parse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedToken(String),
    UnexpectedEnd,
    InvalidNumber(String),
    UnknownIdentifier(String),
    IndexOutOfRange { name: String, dim: usize },
}

/// A parse failure, located by byte offset into the source text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at byte {offset}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

impl std::fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            Self::UnexpectedToken(t) => write!(f, "unexpected token {t:?}"),
            Self::UnexpectedEnd => write!(f, "unexpected end of input"),
            Self::InvalidNumber(s) => write!(f, "invalid number literal {s:?}"),
            Self::UnknownIdentifier(s) => write!(f, "unknown identifier {s:?}"),
            Self::IndexOutOfRange { name, dim } => {
                write!(f, "variable {name} is out of range for dimension {dim}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalErrorKind {
    DivisionByZero,
    LogDomain,
    SqrtDomain,
    PowDomain,
    NonFinite,
}

impl std::fmt::Display for EvalErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::DivisionByZero => "division by zero",
            Self::LogDomain => "log of a non-positive argument",
            Self::SqrtDomain => "sqrt of a negative argument",
            Self::PowDomain => "real power of a non-positive base",
            Self::NonFinite => "non-finite result",
        })
    }
}

/// A domain error raised while evaluating an expression. `subexpr` is the
/// printed form of the node that failed.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} in `{subexpr}`")]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub subexpr: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("evaluating partial {partial}: {source}")]
    Partial { partial: String, source: EvalError },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("metric is singular at this point (|det| = {det:e})")]
    SingularMetric { det: f64 },
    #[error("Lagrangian is degenerate at this point (|det g| = {det:e})")]
    DegenerateLagrangian { det: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for errors that mark the point itself as unusable (a singular
    /// metric, a degenerate Lagrangian or an evaluation domain error), as
    /// opposed to a malformed request.
    pub fn is_singular_point(&self) -> bool {
        matches!(
            self,
            Self::Eval(_)
                | Self::Partial { .. }
                | Self::SingularMetric { .. }
                | Self::DegenerateLagrangian { .. }
        )
    }
}
