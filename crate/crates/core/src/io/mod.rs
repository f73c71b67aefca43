//! Canonical file formats.
//!
//! Every artifact is a UTF-8, LF-terminated, line-delimited file: a JSON
//! header object on the first line, one JSON record per following line.
//! Writers emit canonical bytes (fixed field order, no extra whitespace,
//! records in dataset order), so two writes of equal values are
//! byte-identical and artifacts can be checksummed and diffed.
//!
//! Split and prediction files carry the SHA-256 checksum of the canonical
//! serialization of the dataset they were derived from; readers recompute
//! the dataset's checksum and refuse mismatched inputs.
//!
//! The exact grammar of each format lives in `docs/FORMATS.md`.

mod dataset_file;
mod feature_file;
mod prediction_file;
mod split_file;
mod weights_file;

pub use dataset_file::{dataset_canonical_bytes, dataset_checksum, read_dataset, write_dataset};
pub use feature_file::{read_features, write_features, FEATURES_FORMAT};
pub use prediction_file::{read_predictions, write_predictions, PredictionCoverage};
pub use split_file::{read_split, write_split};
pub use weights_file::{read_weights, write_weights};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::DatasetError;
use crate::metrics::MetricsError;
use crate::split::SplitError;

pub const DATASET_FORMAT: &str = "pedattr.dataset";
pub const SPLIT_FORMAT: &str = "pedattr.split";
pub const PREDICTIONS_FORMAT: &str = "pedattr.predictions";
pub const WEIGHTS_FORMAT: &str = "pedattr.weights";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: expected format `{expected}` version {expected_version}, found `{found}` version {found_version}")]
    UnsupportedFormat {
        path: String,
        expected: &'static str,
        found: String,
        expected_version: u32,
        found_version: u32,
    },
    #[error("record `{image_id}` has {got} values, dataset schema has {expected} attributes")]
    SchemaMismatch {
        image_id: String,
        got: usize,
        expected: usize,
    },
    #[error("file is bound to dataset {stored} but the dataset checksum is {actual}")]
    ChecksumMismatch { stored: String, actual: String },
    #[error("record `{image_id}` has probability {value} outside [0, 1]")]
    ProbabilityOutOfRange { image_id: String, value: f64 },
    #[error("image ids assigned to more than one part: {0:?}")]
    OverlappingSplit(Vec<String>),
    #[error("record `{0}` does not exist in the referenced dataset")]
    UnknownImageId(String),
    #[error("duplicate record for image id `{0}`")]
    DuplicateRecord(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("invalid weight table: {0}")]
    InvalidWeights(String),
    #[error("invalid split: {0}")]
    Split(#[from] SplitError),
    #[error("invalid predictions: {0}")]
    Metrics(#[from] MetricsError),
}

/// Hex SHA-256 of a byte slice.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

/// Hex SHA-256 of a file's raw bytes.
pub fn file_sha256(path: &std::path::Path) -> Result<String, IoError> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

/// Split file content into lines, tolerating CRLF input. Line numbers are
/// 1-based for error reporting.
fn lines(content: &str) -> impl Iterator<Item = (usize, &str)> {
    content
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
}

fn parse_error(path: &std::path::Path, line: usize, message: impl ToString) -> IoError {
    IoError::Parse {
        path: path.display().to_string(),
        line,
        message: message.to_string(),
    }
}

fn check_format(
    path: &std::path::Path,
    expected: &'static str,
    found: &str,
    found_version: u32,
) -> Result<(), IoError> {
    if found != expected || found_version != FORMAT_VERSION {
        return Err(IoError::UnsupportedFormat {
            path: path.display().to_string(),
            expected,
            found: found.to_owned(),
            expected_version: FORMAT_VERSION,
            found_version,
        });
    }
    Ok(())
}
