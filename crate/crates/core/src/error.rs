use thiserror::Error;

/// Errors raised anywhere in the filtering toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("length mismatch: inner has {inner} samples, outer has {outer}")]
    LengthMismatch { inner: usize, outer: usize },

    #[error("empty recording: inner and outer must hold at least one sample")]
    EmptyRecording,

    #[error("trigger out of range: index {index} at position {position} >= length {len}")]
    TriggerOutOfRange {
        index: usize,
        position: usize,
        len: usize,
    },

    #[error("non-positive sample rate: sample_rate_hz = {0}")]
    NonPositiveSampleRate(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("cutoff out of range: {cutoff_hz} Hz must lie strictly between 0 and {nyquist_hz} Hz")]
    CutoffOutOfRange { cutoff_hz: f64, nyquist_hz: f64 },

    #[error("band edges inverted: low {low_hz} Hz >= high {high_hz} Hz")]
    BandEdgesInverted { low_hz: f64, high_hz: f64 },

    #[error("tap vector has {got} entries, expected {expected}")]
    TapCountMismatch { expected: usize, got: usize },

    #[error("divergence: non-finite weight in layer {layer} (learning rate too large?)")]
    Divergence { layer: usize },

    #[error("unstable step size: mu = {mu} exceeds the LMS bound {bound}")]
    UnstableStepSize { mu: f64, bound: f64 },

    #[error("signal too short: {len} samples, need at least {needed}")]
    SignalTooShort { len: usize, needed: usize },

    #[error("band exceeds Nyquist: {hi_hz} Hz > {nyquist_hz} Hz")]
    BandExceedsNyquist { hi_hz: f64, nyquist_hz: f64 },

    #[error("no usable triggers: {skipped} skipped, none with a full window inside the recording")]
    NoUsableTriggers { skipped: usize },

    #[error("event window too short: covers {covered_ms} ms, need {needed_ms} ms")]
    WindowTooShort { covered_ms: f64, needed_ms: f64 },

    #[error("non-positive power: {name} = {value}")]
    NonPositivePower { name: &'static str, value: f64 },

    #[error("insufficient samples: {got} pairs, need at least {needed}")]
    InsufficientSamples { got: usize, needed: usize },

    #[error("ingestion error at line {line}: {message}")]
    Ingest { line: u64, message: String },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("empty result set: nothing to report")]
    EmptyResults,
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Coarse grouping used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Ingestion,
    Divergence,
    Analysis,
    Config,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::LengthMismatch { .. }
            | Error::EmptyRecording
            | Error::TriggerOutOfRange { .. }
            | Error::Ingest { .. } => ErrorKind::Ingestion,
            Error::Divergence { .. } | Error::UnstableStepSize { .. } => ErrorKind::Divergence,
            Error::SignalTooShort { .. }
            | Error::BandExceedsNyquist { .. }
            | Error::NoUsableTriggers { .. }
            | Error::WindowTooShort { .. }
            | Error::NonPositivePower { .. }
            | Error::InsufficientSamples { .. }
            | Error::EmptyResults => ErrorKind::Analysis,
            Error::NonPositiveSampleRate(_)
            | Error::InvalidParameter { .. }
            | Error::CutoffOutOfRange { .. }
            | Error::BandEdgesInverted { .. }
            | Error::TapCountMismatch { .. } => ErrorKind::Config,
            Error::Io(_) => ErrorKind::Io,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
