use std::fmt;
use std::io;
use std::path::Path;

use gsdp_zkp::netauth::NetError;
use gsdp_zkp::{FieldError, GsdpError, KeyError, MatrixError, ProtocolError};

/// A failure, sorted into the exit-code category it reports as.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(io::Error),
    File(String),
    Protocol(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Io(_) | Self::File(_) => 3,
            Self::Protocol(_) => 4,
        }
    }

    pub fn io_at(e: io::Error, path: &Path) -> Self {
        Self::File(format!("{}: {e}", path.display()))
    }

    /// Attaches the offending path to file-level failures.
    pub fn with_path(e: KeyError, path: &Path) -> Self {
        match Self::from(e) {
            Self::Io(io) => Self::io_at(io, path),
            Self::File(msg) => Self::File(format!("{}: {msg}", path.display())),
            other => other,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "invalid argument: {m}"),
            Self::Io(e) => write!(f, "i/o: {e}"),
            Self::File(m) => write!(f, "i/o: {m}"),
            Self::Protocol(m) => write!(f, "protocol: {m}"),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::Io(e)
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        Self::Usage(e.to_string())
    }
}

impl From<MatrixError> for CliError {
    fn from(e: MatrixError) -> Self {
        Self::Usage(e.to_string())
    }
}

impl From<KeyError> for CliError {
    fn from(e: KeyError) -> Self {
        match e {
            KeyError::Io(io) => Self::Io(io),
            KeyError::Json(_) | KeyError::BadFile(_) | KeyError::Wire(_) => Self::File(e.to_string()),
            KeyError::FingerprintMismatch { .. } => Self::Protocol(e.to_string()),
            other => Self::Usage(other.to_string()),
        }
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::Key(k) => k.into(),
            ProtocolError::Io(io) => Self::Io(io),
            ProtocolError::NoRounds => Self::Usage(e.to_string()),
            other => Self::Protocol(other.to_string()),
        }
    }
}

impl From<GsdpError> for CliError {
    fn from(e: GsdpError) -> Self {
        match e {
            GsdpError::Key(k) => k.into(),
            other => Self::Usage(other.to_string()),
        }
    }
}

impl From<NetError> for CliError {
    fn from(e: NetError) -> Self {
        match e {
            NetError::Connect(_) | NetError::Io(_) | NetError::Timeout => Self::File(e.to_string()),
            NetError::Key(k) => k.into(),
            other => Self::Protocol(other.to_string()),
        }
    }
}
