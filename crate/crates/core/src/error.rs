use std::path::PathBuf;

use thiserror::Error;

use crate::event::Pixel;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("line {line}: {msg}")]
    MalformedLine { line: usize, msg: String },
    #[error("pixel ({}, {}) outside {width}x{height} sensor", .pixel.x, .pixel.y)]
    OutOfBounds {
        pixel: Pixel,
        width: u16,
        height: u16,
    },
    #[error("invalid polarity {0}, expected -1 or 1")]
    InvalidPolarity(i64),
    #[error("bad magic bytes {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("truncated file: need {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },
    #[error("record count mismatch: header says {declared}, payload holds {actual}")]
    CountMismatch { declared: u64, actual: u64 },
    #[error("code {0} outside the pairable 16-bit range")]
    CodeRange(u64),
    #[error("key file is corrupt: {0}")]
    CorruptKey(String),
    #[error("key did not decode with the supplied secret")]
    WrongSecret,
    #[error("unknown key cipher id {0}")]
    UnknownCipher(u8),
    #[error("cannot encrypt an empty stream")]
    EmptyStream,
    #[error("cannot inject noise into an empty stream")]
    EmptyInjection,
    #[error("key plane does not fit the stream: {0}")]
    InvalidKey(String),
    #[error("cannot write a key for an empty plane")]
    EmptyPlane,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("frame dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u16, u16, u16, u16),
    #[error("invalid time window [{0}, {1}]")]
    InvalidWindow(u64, u64),
    #[error("label count {labels} does not match event count {events}")]
    LabelMismatch { labels: usize, events: usize },
    #[error("benchmark needs at least one trial")]
    EmptyReport,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by key material (checksum, cipher, secret).
    pub fn is_key_error(&self) -> bool {
        matches!(
            self,
            Error::CorruptKey(_) | Error::WrongSecret | Error::UnknownCipher(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
