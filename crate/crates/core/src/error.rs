// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("truncated point file: trailing bytes start at offset {offset}")]
    Truncated { offset: u64 },

    #[error("non-finite value at byte offset {offset}")]
    NonFinite { offset: u64 },

    #[error("label parse error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid label #{index}: {reason}")]
    InvalidLabel { index: usize, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("grid payload truncated: expected {expected} bytes, found {found}")]
    GridTruncated { expected: usize, found: usize },

    #[error("grid dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("point #{index} at ({x}, {y}) lies outside the grid")]
    OutOfGrid { index: usize, x: f64, y: f64 },

    #[error("region [{i0},{i1})x[{j0},{j1}) outside a {rows}x{cols} grid")]
    RegionOutOfBounds {
        i0: usize,
        i1: usize,
        j0: usize,
        j1: usize,
        rows: usize,
        cols: usize,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("plane fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),

    #[error("plane fit failed: every sampled triple was degenerate")]
    DegenerateSamples,

    #[error("box with yaw {0} is not axis-aligned; 4CA needs theta in {{0, +-pi/2, pi}}")]
    UnsupportedRepresentation(f64),

    #[error("objects #{0} and #{1} overlap")]
    OverlappingObjects(usize, usize),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of an algorithm on well-formed input, as opposed to
    /// malformed input or I/O problems.
    pub fn is_algorithmic(&self) -> bool {
        matches!(
            self,
            Error::TooFewPoints(_) | Error::DegenerateSamples | Error::OverlappingObjects(..)
        )
    }
}
