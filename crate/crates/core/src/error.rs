use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Every failure the attribution toolkit can report.
///
/// Model backends (builtin or remote) map their own failures onto the
/// `ModelUnavailable`, `Timeout`, `Protocol` and `RemoteFailure` variants so
/// attribution code can propagate them without knowing the transport.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    EmptyInput,
    InvalidSequence(String),
    InvalidExample(String),
    InvalidOutput(String),
    InvalidConfig(String),
    PositionOutOfRange { position: usize, len: usize },
    InputTooShort { len: usize, min: usize },
    LengthMismatch { expected: usize, found: usize },
    ModelUnavailable(String),
    Timeout,
    Protocol(String),
    RemoteFailure { status: u16, message: String },
    EmptyCorpus,
    SingleLabelCorpus,
    UnknownLabel(String),
    DegenerateDesign,
    SingularSystem,
    ConstantVector,
    TooFewValues { min: usize, found: usize },
    BadDomain(&'static str),
    Misaligned(String),
    NoHighlights,
    SpanOutOfRange { start: usize, end: usize, len: usize },
    MissingCounts,
    BadBoundaries(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyInput => write!(f, "empty input sequence"),
            Error::InvalidSequence(m) => write!(f, "invalid token sequence: {m}"),
            Error::InvalidExample(m) => write!(f, "invalid example: {m}"),
            Error::InvalidOutput(m) => write!(f, "invalid classifier output: {m}"),
            Error::InvalidConfig(m) => write!(f, "invalid configuration: {m}"),
            Error::PositionOutOfRange { position, len } => {
                write!(f, "position {position} out of range for {len} tokens")
            }
            Error::InputTooShort { len, min } => {
                write!(f, "input has {len} tokens, at least {min} required")
            }
            Error::LengthMismatch { expected, found } => {
                write!(f, "length mismatch: expected {expected}, found {found}")
            }
            Error::ModelUnavailable(m) => write!(f, "model unavailable: {m}"),
            Error::Timeout => write!(f, "model request timed out"),
            Error::Protocol(m) => write!(f, "protocol error: {m}"),
            Error::RemoteFailure { status, message } => {
                write!(f, "remote failure ({status}): {message}")
            }
            Error::EmptyCorpus => write!(f, "corpus is empty"),
            Error::SingleLabelCorpus => write!(f, "corpus needs at least two distinct labels"),
            Error::UnknownLabel(l) => write!(f, "unknown label {l:?}"),
            Error::DegenerateDesign => write!(f, "all sampled masks are identical"),
            Error::SingularSystem => write!(f, "normal equations are singular"),
            Error::ConstantVector => write!(f, "correlation undefined for a constant vector"),
            Error::TooFewValues { min, found } => {
                write!(f, "need at least {min} values, found {found}")
            }
            Error::BadDomain(m) => write!(f, "bad integration domain: {m}"),
            Error::Misaligned(m) => write!(f, "misaligned inputs: {m}"),
            Error::NoHighlights => write!(f, "example has no human highlight"),
            Error::SpanOutOfRange { start, end, len } => {
                write!(f, "span [{start}, {end}) out of range for {len} tokens")
            }
            Error::MissingCounts => write!(f, "example has no annotator counts"),
            Error::BadBoundaries(m) => write!(f, "bad sentence boundaries: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

impl Error {
    /// True for failures that come from a model backend rather than from the
    /// caller's inputs.
    pub fn is_model_error(&self) -> bool {
        matches!(self, Error::ModelUnavailable(_) | Error::Timeout | Error::Protocol(_) | Error::RemoteFailure { .. })
    }
}
