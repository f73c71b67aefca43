//! Feature sidecar files for synthetic datasets: one feature vector per
//! image, bound to the dataset checksum.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::synth::SynthDataset;

use super::{check_format, dataset_checksum, lines, parse_error, IoError, FORMAT_VERSION};

pub const FEATURES_FORMAT: &str = "pedattr.features";

#[derive(Serialize, Deserialize)]
struct FeatureHeader {
    format: String,
    version: u32,
    dataset_sha256: String,
    feature_dim: usize,
}

#[derive(Serialize, Deserialize)]
struct FeatureRecord {
    image_id: String,
    features: Vec<f32>,
}

pub fn write_features(synth: &SynthDataset, path: &Path) -> Result<(), IoError> {
    let header = FeatureHeader {
        format: FEATURES_FORMAT.to_owned(),
        version: FORMAT_VERSION,
        dataset_sha256: dataset_checksum(&synth.dataset),
        feature_dim: synth.feature_dim(),
    };
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    for (pos, sample) in synth.dataset.samples().iter().enumerate() {
        let record = FeatureRecord {
            image_id: sample.image_id.clone(),
            features: synth.features(pos).to_vec(),
        };
        out.extend_from_slice(&serde_json::to_vec(&record).expect("record serializes"));
        out.push(b'\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read a feature sidecar and align it to the dataset. Every sample must
/// have exactly one feature record.
pub fn read_features(path: &Path, dataset: &Dataset) -> Result<SynthDataset, IoError> {
    let content = std::fs::read_to_string(path)?;
    let mut line_iter = lines(&content);
    let (line_no, header_line) = line_iter
        .next()
        .ok_or_else(|| parse_error(path, 0, "empty file"))?;
    let header: FeatureHeader = serde_json::from_str(header_line)
        .map_err(|e| parse_error(path, line_no, format!("bad header: {e}")))?;
    check_format(path, FEATURES_FORMAT, &header.format, header.version)?;
    let actual = dataset_checksum(dataset);
    if header.dataset_sha256 != actual {
        return Err(IoError::ChecksumMismatch {
            stored: header.dataset_sha256,
            actual,
        });
    }
    let d = header.feature_dim;
    let index = dataset.position_index();
    let mut rows: Vec<Option<Vec<f32>>> = vec![None; dataset.len()];
    for (line_no, line) in line_iter {
        if line.is_empty() {
            continue;
        }
        let record: FeatureRecord = serde_json::from_str(line)
            .map_err(|e| parse_error(path, line_no, format!("bad record: {e}")))?;
        let &pos = index
            .get(record.image_id.as_str())
            .ok_or_else(|| IoError::UnknownImageId(record.image_id.clone()))?;
        if rows[pos].is_some() {
            return Err(IoError::DuplicateRecord(record.image_id));
        }
        if record.features.len() != d {
            return Err(IoError::SchemaMismatch {
                image_id: record.image_id,
                got: record.features.len(),
                expected: d,
            });
        }
        rows[pos] = Some(record.features);
    }
    let mut features = Vec::with_capacity(dataset.len() * d);
    for (pos, row) in rows.into_iter().enumerate() {
        match row {
            Some(values) => features.extend(values),
            None => {
                return Err(IoError::Parse {
                    path: path.display().to_string(),
                    line: 0,
                    message: format!(
                        "no feature record for image `{}`",
                        dataset.sample(pos).image_id
                    ),
                })
            }
        }
    }
    Ok(SynthDataset::new(dataset.clone(), features, d).expect("every sample covered"))
}
