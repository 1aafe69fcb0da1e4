use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the segmenter can report.
///
/// Each variant carries a stable, machine-parsable code (see [`Error::code`])
/// so front ends can emit diagnostics without leaking file/line details.
#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt audio header: {0}")]
    CorruptHeader(String),

    #[error("non-PCM sample encoding: {0}")]
    NonPcmEncoding(String),

    #[error("degenerate signal: the demeaned waveform is identically zero")]
    DegenerateSignal,

    #[error("malformed label line {line}: {content:?}")]
    MalformedLine { line: usize, content: String },

    #[error("label spans are not monotonic at line {line}")]
    NonMonotonicSpans { line: usize },

    #[error("bandpass {f1} Hz / {f2} Hz is invalid for a {sample_rate} Hz signal")]
    SpecInvalidForRate { f1: f64, f2: f64, sample_rate: u32 },

    #[error("frame has fewer than two zero crossings")]
    InsufficientZeroCrossings,

    #[error("frame has no surviving extrema")]
    NoExtrema,

    #[error("inconsistent transition sequence: {0}")]
    InconsistentSequence(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("phone map line {line}: {message}")]
    PhoneMap { line: usize, message: String },

    #[error("no utterances found under {}", .0.display())]
    EmptyCorpus(PathBuf),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::NotFound(path)
        } else {
            Error::Io { path, source }
        }
    }

    /// Stable diagnostic code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotFound(_) => "IO_NOT_FOUND",
            Error::Io { .. } => "IO_ERROR",
            Error::UnsupportedFormat(_) => "UNSUPPORTED_FORMAT",
            Error::CorruptHeader(_) => "CORRUPT_HEADER",
            Error::NonPcmEncoding(_) => "NON_PCM_ENCODING",
            Error::DegenerateSignal => "DEGENERATE_SIGNAL",
            Error::MalformedLine { .. } => "MALFORMED_LINE",
            Error::NonMonotonicSpans { .. } => "NON_MONOTONIC_SPANS",
            Error::SpecInvalidForRate { .. } => "SPEC_INVALID_FOR_RATE",
            Error::InsufficientZeroCrossings => "INSUFFICIENT_ZERO_CROSSINGS",
            Error::NoExtrema => "NO_EXTREMA",
            Error::InconsistentSequence(_) => "INCONSISTENT_SEQUENCE",
            Error::InvalidParams(_) => "INVALID_PARAMS",
            Error::PhoneMap { .. } => "PHONE_MAP",
            Error::EmptyCorpus(_) => "EMPTY_CORPUS",
        }
    }
}
