//! Dataset files: a header naming the attributes, then one record per
//! sample.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{AttributeSchema, Dataset, Sample};

use super::{check_format, lines, parse_error, sha256_hex, IoError, DATASET_FORMAT, FORMAT_VERSION};

#[derive(Serialize, Deserialize)]
struct DatasetHeader {
    format: String,
    version: u32,
    attributes: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct DatasetRecord {
    image_id: String,
    identity_id: Option<String>,
    labels: Vec<u8>,
}

/// Canonical serialization: header line plus one record line per sample,
/// each LF-terminated, compact JSON with fixed field order.
pub fn dataset_canonical_bytes(dataset: &Dataset) -> Vec<u8> {
    let header = DatasetHeader {
        format: DATASET_FORMAT.to_owned(),
        version: FORMAT_VERSION,
        attributes: dataset.schema().names().to_vec(),
    };
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    for sample in dataset.samples() {
        let record = DatasetRecord {
            image_id: sample.image_id.clone(),
            identity_id: sample.identity_id.clone(),
            labels: sample.labels.clone(),
        };
        out.extend_from_slice(&serde_json::to_vec(&record).expect("record serializes"));
        out.push(b'\n');
    }
    out
}

/// Hex SHA-256 over the canonical serialization. This is the checksum that
/// binds split and prediction files to a dataset.
pub fn dataset_checksum(dataset: &Dataset) -> String {
    sha256_hex(&dataset_canonical_bytes(dataset))
}

pub fn write_dataset(dataset: &Dataset, path: &Path) -> Result<(), IoError> {
    std::fs::write(path, dataset_canonical_bytes(dataset))?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Dataset, IoError> {
    let content = std::fs::read_to_string(path)?;
    let mut line_iter = lines(&content);
    let (line_no, header_line) = line_iter
        .next()
        .ok_or_else(|| parse_error(path, 0, "empty file"))?;
    let header: DatasetHeader = serde_json::from_str(header_line)
        .map_err(|e| parse_error(path, line_no, format!("bad header: {e}")))?;
    check_format(path, DATASET_FORMAT, &header.format, header.version)?;
    let schema = AttributeSchema::new(header.attributes)?;
    let m = schema.len();

    let mut samples = Vec::new();
    for (line_no, line) in line_iter {
        if line.is_empty() {
            continue;
        }
        let record: DatasetRecord = serde_json::from_str(line)
            .map_err(|e| parse_error(path, line_no, format!("bad record: {e}")))?;
        if record.labels.len() != m {
            return Err(IoError::SchemaMismatch {
                image_id: record.image_id,
                got: record.labels.len(),
                expected: m,
            });
        }
        samples.push(Sample {
            image_id: record.image_id,
            identity_id: record.identity_id,
            labels: record.labels,
        });
    }
    Ok(Dataset::new(schema, samples)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_dataset() -> Dataset {
        let schema = AttributeSchema::new(vec!["hat".into(), "bag".into()]).unwrap();
        let samples = vec![
            Sample {
                image_id: "a".into(),
                identity_id: Some("p1".into()),
                labels: vec![1, 0],
            },
            Sample {
                image_id: "b".into(),
                identity_id: None,
                labels: vec![0, 1],
            },
        ];
        Dataset::new(schema, samples).unwrap()
    }

    #[test]
    fn minimal_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.jsonl");
        let ds = sample_dataset();
        write_dataset(&ds, &path).unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(back, ds);
        assert_eq!(back.len(), 2);
    }

    #[test]
    fn canonical_bytes_are_deterministic() {
        let ds = sample_dataset();
        assert_eq!(dataset_canonical_bytes(&ds), dataset_canonical_bytes(&ds));
        assert_eq!(dataset_checksum(&ds), dataset_checksum(&ds));
    }

    #[test]
    fn ragged_record_names_the_offender() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.jsonl");
        let content = concat!(
            r#"{"format":"pedattr.dataset","version":1,"attributes":["hat","bag"]}"#,
            "\n",
            r#"{"image_id":"ok","identity_id":null,"labels":[1,0]}"#,
            "\n",
            r#"{"image_id":"bad","identity_id":null,"labels":[1]}"#,
            "\n"
        );
        std::fs::write(&path, content).unwrap();
        match read_dataset(&path) {
            Err(IoError::SchemaMismatch { image_id, got, expected }) => {
                assert_eq!(image_id, "bad");
                assert_eq!((got, expected), (1, 2));
            }
            other => panic!("expected schema mismatch, got {other:?}"),
        }
    }

    #[test]
    fn wrong_format_tag_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.jsonl");
        std::fs::write(
            &path,
            "{\"format\":\"other\",\"version\":1,\"attributes\":[\"x\"]}\n",
        )
        .unwrap();
        assert!(matches!(
            read_dataset(&path),
            Err(IoError::UnsupportedFormat { .. })
        ));
    }

    #[test]
    fn parse_error_carries_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.jsonl");
        let content = concat!(
            r#"{"format":"pedattr.dataset","version":1,"attributes":["hat"]}"#,
            "\n",
            "not json\n"
        );
        std::fs::write(&path, content).unwrap();
        match read_dataset(&path) {
            Err(IoError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
