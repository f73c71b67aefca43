//! Split files: a header binding the split to a dataset checksum and
//! recording seed, method and criteria summary, then one record per image
//! id naming its part.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::split::{CriteriaReport, Part, SplitError, SplitMethod, SplitSpec};

use super::{
    check_format, dataset_checksum, lines, parse_error, IoError, FORMAT_VERSION, SPLIT_FORMAT,
};

#[derive(Serialize, Deserialize)]
struct SplitHeader {
    format: String,
    version: u32,
    dataset_sha256: String,
    seed: u64,
    #[serde(flatten)]
    method: SplitMethod,
    criteria: Option<CriteriaReport>,
}

#[derive(Serialize, Deserialize)]
struct SplitRecord {
    part: Part,
    image_id: String,
}

fn canonical_bytes(dataset: &Dataset, split: &SplitSpec) -> Vec<u8> {
    let header = SplitHeader {
        format: SPLIT_FORMAT.to_owned(),
        version: FORMAT_VERSION,
        dataset_sha256: dataset_checksum(dataset),
        seed: split.seed(),
        method: split.method().clone(),
        criteria: split.criteria().cloned(),
    };
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    for part in Part::ALL {
        for &pos in split.part(part) {
            let record = SplitRecord {
                part,
                image_id: dataset.sample(pos).image_id.clone(),
            };
            out.extend_from_slice(&serde_json::to_vec(&record).expect("record serializes"));
            out.push(b'\n');
        }
    }
    out
}

/// Write the canonical serialization: parts in train/valid/test order, ids
/// in ascending dataset position within each part.
pub fn write_split(dataset: &Dataset, split: &SplitSpec, path: &Path) -> Result<(), IoError> {
    std::fs::write(path, canonical_bytes(dataset, split))?;
    Ok(())
}

/// Read a split and re-validate it against the dataset: the checksum must
/// match, every id must exist, and no id may appear in more than one part.
pub fn read_split(path: &Path, dataset: &Dataset) -> Result<SplitSpec, IoError> {
    let content = std::fs::read_to_string(path)?;
    let mut line_iter = lines(&content);
    let (line_no, header_line) = line_iter
        .next()
        .ok_or_else(|| parse_error(path, 0, "empty file"))?;
    let header: SplitHeader = serde_json::from_str(header_line)
        .map_err(|e| parse_error(path, line_no, format!("bad header: {e}")))?;
    check_format(path, SPLIT_FORMAT, &header.format, header.version)?;
    let actual = dataset_checksum(dataset);
    if header.dataset_sha256 != actual {
        return Err(IoError::ChecksumMismatch {
            stored: header.dataset_sha256,
            actual,
        });
    }

    let index = dataset.position_index();
    let mut parts: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (line_no, line) in line_iter {
        if line.is_empty() {
            continue;
        }
        let record: SplitRecord = serde_json::from_str(line)
            .map_err(|e| parse_error(path, line_no, format!("bad record: {e}")))?;
        let &pos = index
            .get(record.image_id.as_str())
            .ok_or_else(|| IoError::UnknownImageId(record.image_id.clone()))?;
        let slot = match record.part {
            Part::Train => 0,
            Part::Valid => 1,
            Part::Test => 2,
        };
        parts[slot].push(pos);
    }
    let [train, valid, test] = parts;
    SplitSpec::from_parts(
        dataset,
        train,
        valid,
        test,
        header.seed,
        header.method,
        header.criteria,
    )
    .map_err(|e| match e {
        SplitError::Overlap(id) => IoError::OverlappingSplit(vec![id]),
        other => IoError::Split(other),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{AttributeSchema, Sample};
    use crate::split::Thresholds;

    fn dataset(n: usize) -> Dataset {
        let schema = AttributeSchema::new(vec!["x".into()]).unwrap();
        let samples = (0..n)
            .map(|i| Sample {
                image_id: format!("img{i}"),
                identity_id: Some(format!("p{i}")),
                labels: vec![(i % 2) as u8],
            })
            .collect();
        Dataset::new(schema, samples).unwrap()
    }

    fn search_method() -> SplitMethod {
        SplitMethod::Search {
            thresholds: Thresholds::default(),
            trial_index: 3,
        }
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let ds = dataset(5);
        let split = SplitSpec::from_parts(
            &ds,
            vec![0, 1, 2],
            vec![3],
            vec![4],
            42,
            search_method(),
            None,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("split.jsonl");
        write_split(&ds, &split, &path).unwrap();
        let first = std::fs::read(&path).unwrap();
        let back = read_split(&path, &ds).unwrap();
        assert_eq!(back, split);
        let path2 = dir.path().join("split2.jsonl");
        write_split(&ds, &back, &path2).unwrap();
        assert_eq!(first, std::fs::read(&path2).unwrap());
    }

    #[test]
    fn overlapping_ids_are_a_hard_error() {
        let ds = dataset(3);
        let content = format!(
            "{}\n{}\n{}\n{}\n",
            format_args!(
                r#"{{"format":"pedattr.split","version":1,"dataset_sha256":"{}","seed":1,"method":"random","fractions":[0.5,0.0,0.5],"criteria":null}}"#,
                dataset_checksum(&ds)
            ),
            r#"{"part":"train","image_id":"img0"}"#,
            r#"{"part":"test","image_id":"img0"}"#,
            r#"{"part":"test","image_id":"img1"}"#,
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("split.jsonl");
        std::fs::write(&path, content).unwrap();
        match read_split(&path, &ds) {
            Err(IoError::OverlappingSplit(ids)) => assert_eq!(ids, vec!["img0".to_owned()]),
            other => panic!("expected overlap error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_image_id_is_rejected() {
        let ds = dataset(2);
        let content = format!(
            "{}\n{}\n",
            format_args!(
                r#"{{"format":"pedattr.split","version":1,"dataset_sha256":"{}","seed":1,"method":"random","fractions":[1.0,0.0,0.0],"criteria":null}}"#,
                dataset_checksum(&ds)
            ),
            r#"{"part":"train","image_id":"ghost"}"#,
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("split.jsonl");
        std::fs::write(&path, content).unwrap();
        assert!(matches!(
            read_split(&path, &ds),
            Err(IoError::UnknownImageId(id)) if id == "ghost"
        ));
    }

    #[test]
    fn checksum_mismatch_is_rejected() {
        let ds = dataset(2);
        let other = dataset(3);
        let split = SplitSpec::from_parts(
            &ds,
            vec![0],
            vec![],
            vec![1],
            7,
            search_method(),
            None,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("split.jsonl");
        write_split(&ds, &split, &path).unwrap();
        assert!(matches!(
            read_split(&path, &other),
            Err(IoError::ChecksumMismatch { .. })
        ));
    }
}
