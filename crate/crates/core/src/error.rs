use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which edge of a box fell outside the frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Left,
    Top,
    Right,
    Bottom,
}

impl std::fmt::Display for Edge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Edge::Left => "left",
            Edge::Top => "top",
            Edge::Right => "right",
            Edge::Bottom => "bottom",
        })
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("decode error in {field}: {reason}")]
    Decode { field: &'static str, reason: String },

    #[error("box {bbox} exceeds the {edge} edge of a {width}x{height} frame")]
    OutOfBounds {
        bbox: crate::imaging::BBox,
        edge: Edge,
        width: usize,
        height: usize,
    },

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid synth spec: {0}")]
    Spec(String),

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("frame {index}: {source}")]
    Frame {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("evaluation frame mismatch: {0}")]
    IndexMismatch(String),

    #[error("no such input: {}", .0.display())]
    NoSuchInput(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn decode(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Decode {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn at_frame(self, index: usize) -> Self {
        match self {
            e @ Error::Frame { .. } => e,
            other => Error::Frame {
                index,
                source: Box::new(other),
            },
        }
    }

    /// The innermost error, skipping frame-index wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Frame { source, .. } => source.root(),
            other => other,
        }
    }
}
