//! Prediction files: per-image probability vectors bound to a dataset
//! checksum.
//!
//! Probabilities are written as plain decimal text with 9 fractional
//! digits; readers take the written text at face value. Records may appear
//! in any order; the reader aligns them to dataset sample order.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::dataset::Dataset;
use crate::metrics::PredictionSet;

use super::{
    check_format, dataset_checksum, lines, parse_error, IoError, FORMAT_VERSION,
    PREDICTIONS_FORMAT,
};

#[derive(Deserialize)]
struct PredictionHeader {
    format: String,
    version: u32,
    dataset_sha256: String,
    n_attributes: usize,
}

#[derive(Deserialize)]
struct PredictionRecord {
    image_id: String,
    probs: Vec<f64>,
}

/// Which dataset samples the prediction file covered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionCoverage {
    pub covered: usize,
    /// Dataset samples without a prediction record.
    pub missing: usize,
}

/// Write records for `(image_id, probabilities)` rows. Rows are written in
/// the given order; the canonical order is ascending dataset position.
pub fn write_predictions(
    path: &Path,
    dataset: &Dataset,
    rows: &[(String, Vec<f64>)],
) -> Result<(), IoError> {
    let m = dataset.n_attributes();
    let mut out = format!(
        "{{\"format\":\"{}\",\"version\":{},\"dataset_sha256\":\"{}\",\"n_attributes\":{}}}\n",
        PREDICTIONS_FORMAT,
        FORMAT_VERSION,
        dataset_checksum(dataset),
        m
    );
    for (image_id, probs) in rows {
        if probs.len() != m {
            return Err(IoError::SchemaMismatch {
                image_id: image_id.clone(),
                got: probs.len(),
                expected: m,
            });
        }
        if let Some(&bad) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(IoError::ProbabilityOutOfRange {
                image_id: image_id.clone(),
                value: bad,
            });
        }
        let id_json = serde_json::to_string(image_id).expect("string serializes");
        write!(out, "{{\"image_id\":{id_json},\"probs\":[").expect("string write");
        for (j, p) in probs.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{p:.9}").expect("string write");
        }
        out.push_str("]}\n");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read predictions and align them to dataset sample order.
///
/// The stored dataset checksum must match unless `allow_checksum_mismatch`
/// is set. Unknown image ids and duplicate records are hard errors; samples
/// without a record are fine and reported in the coverage summary.
pub fn read_predictions(
    path: &Path,
    dataset: &Dataset,
    allow_checksum_mismatch: bool,
) -> Result<(PredictionSet, PredictionCoverage), IoError> {
    let content = std::fs::read_to_string(path)?;
    let mut line_iter = lines(&content);
    let (line_no, header_line) = line_iter
        .next()
        .ok_or_else(|| parse_error(path, 0, "empty file"))?;
    let header: PredictionHeader = serde_json::from_str(header_line)
        .map_err(|e| parse_error(path, line_no, format!("bad header: {e}")))?;
    check_format(path, PREDICTIONS_FORMAT, &header.format, header.version)?;
    let actual = dataset_checksum(dataset);
    if header.dataset_sha256 != actual && !allow_checksum_mismatch {
        return Err(IoError::ChecksumMismatch {
            stored: header.dataset_sha256,
            actual,
        });
    }
    let m = dataset.n_attributes();
    if header.n_attributes != m {
        return Err(IoError::SchemaMismatch {
            image_id: "<header>".to_owned(),
            got: header.n_attributes,
            expected: m,
        });
    }

    let index = dataset.position_index();
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; dataset.len()];
    for (line_no, line) in line_iter {
        if line.is_empty() {
            continue;
        }
        let record: PredictionRecord = serde_json::from_str(line)
            .map_err(|e| parse_error(path, line_no, format!("bad record: {e}")))?;
        let &pos = index
            .get(record.image_id.as_str())
            .ok_or_else(|| IoError::UnknownImageId(record.image_id.clone()))?;
        if rows[pos].is_some() {
            return Err(IoError::DuplicateRecord(record.image_id));
        }
        if record.probs.len() != m {
            return Err(IoError::SchemaMismatch {
                image_id: record.image_id,
                got: record.probs.len(),
                expected: m,
            });
        }
        if let Some(&bad) = record.probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(IoError::ProbabilityOutOfRange {
                image_id: record.image_id,
                value: bad,
            });
        }
        rows[pos] = Some(record.probs);
    }

    let mut positions = Vec::new();
    let mut data = Vec::new();
    for (pos, row) in rows.into_iter().enumerate() {
        if let Some(probs) = row {
            positions.push(pos);
            data.extend(probs);
        }
    }
    let covered = positions.len();
    let coverage = PredictionCoverage {
        covered,
        missing: dataset.len() - covered,
    };
    Ok((PredictionSet::new(positions, data, m)?, coverage))
}
