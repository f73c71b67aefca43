//! Domain model for attribute-annotated datasets.
//!
//! A [`Dataset`] is an ordered list of samples, each carrying a binary label
//! vector aligned to a shared [`AttributeSchema`] and, optionally, a
//! pedestrian identity. Identities group the near-duplicate images of one
//! person; they are opaque strings because source datasets encode them
//! differently. All values are immutable after construction.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::pairwise_sum;

#[derive(Debug, Error, PartialEq)]
pub enum DatasetError {
    #[error("attribute schema is empty")]
    EmptySchema,
    #[error("duplicate attribute name `{0}`")]
    DuplicateAttribute(String),
    #[error("dataset has no samples")]
    EmptyDataset,
    #[error("duplicate image id `{0}`")]
    DuplicateImageId(String),
    #[error("sample `{image_id}` has {got} labels, schema has {expected} attributes")]
    LabelLengthMismatch {
        image_id: String,
        got: usize,
        expected: usize,
    },
    #[error("sample `{image_id}` has non-binary label value {value}")]
    NonBinaryLabel { image_id: String, value: u8 },
    #[error("subset is empty")]
    EmptySubset,
    #[error("sample position {0} out of range")]
    PositionOutOfRange(usize),
    #[error("pruning would remove every attribute")]
    AllAttributesPruned,
    #[error("pruning would remove every sample")]
    AllSamplesPruned,
}

/// Ordered list of distinct attribute names; the canonical column order for
/// every label and probability vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSchema {
    names: Vec<String>,
}

impl AttributeSchema {
    pub fn new(names: Vec<String>) -> Result<Self, DatasetError> {
        if names.is_empty() {
            return Err(DatasetError::EmptySchema);
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(DatasetError::DuplicateAttribute(name.clone()));
            }
        }
        Ok(Self { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, j: usize) -> &str {
        &self.names[j]
    }
}

/// One labeled image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub image_id: String,
    pub identity_id: Option<String>,
    /// Binary label vector, one entry per schema attribute, values 0 or 1.
    pub labels: Vec<u8>,
}

/// An immutable attribute-annotated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: AttributeSchema,
    samples: Vec<Sample>,
}

impl Dataset {
    /// Validates sample/schema consistency: label vectors must match the
    /// schema width, values must be binary, image ids must be unique.
    pub fn new(schema: AttributeSchema, samples: Vec<Sample>) -> Result<Self, DatasetError> {
        if samples.is_empty() {
            return Err(DatasetError::EmptyDataset);
        }
        let m = schema.len();
        let mut ids = HashSet::with_capacity(samples.len());
        for sample in &samples {
            if sample.labels.len() != m {
                return Err(DatasetError::LabelLengthMismatch {
                    image_id: sample.image_id.clone(),
                    got: sample.labels.len(),
                    expected: m,
                });
            }
            if let Some(&value) = sample.labels.iter().find(|&&v| v > 1) {
                return Err(DatasetError::NonBinaryLabel {
                    image_id: sample.image_id.clone(),
                    value,
                });
            }
            if !ids.insert(sample.image_id.as_str()) {
                return Err(DatasetError::DuplicateImageId(sample.image_id.clone()));
            }
        }
        Ok(Self { schema, samples })
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn sample(&self, position: usize) -> &Sample {
        &self.samples[position]
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of attributes.
    pub fn n_attributes(&self) -> usize {
        self.schema.len()
    }

    /// Map image ids to sample positions.
    pub fn position_index(&self) -> HashMap<&str, usize> {
        self.samples
            .iter()
            .enumerate()
            .map(|(i, s)| (s.image_id.as_str(), i))
            .collect()
    }
}

/// Sample positions grouped by identity, in order of first appearance.
///
/// Positions of samples without an identity land in the `unidentified` set;
/// the identity groups plus the unidentified set partition all positions.
#[derive(Debug, Clone)]
pub struct IdentityIndex {
    identities: Vec<String>,
    positions: Vec<Vec<usize>>,
    by_name: HashMap<String, usize>,
    unidentified: Vec<usize>,
}

impl IdentityIndex {
    /// Number of distinct identities.
    pub fn n_identities(&self) -> usize {
        self.identities.len()
    }

    /// Identity names in first-appearance order.
    pub fn identities(&self) -> &[String] {
        &self.identities
    }

    pub fn identity(&self, k: usize) -> &str {
        &self.identities[k]
    }

    /// Sample positions of the `k`-th identity, ascending.
    pub fn positions(&self, k: usize) -> &[usize] {
        &self.positions[k]
    }

    pub fn lookup(&self, identity_id: &str) -> Option<usize> {
        self.by_name.get(identity_id).copied()
    }

    /// Positions of samples that carry no identity, ascending.
    pub fn unidentified(&self) -> &[usize] {
        &self.unidentified
    }
}

/// Group sample positions by identity.
pub fn build_identity_index(dataset: &Dataset) -> IdentityIndex {
    let mut identities = Vec::new();
    let mut positions: Vec<Vec<usize>> = Vec::new();
    let mut by_name: HashMap<String, usize> = HashMap::new();
    let mut unidentified = Vec::new();
    for (i, sample) in dataset.samples().iter().enumerate() {
        match &sample.identity_id {
            Some(id) => {
                let k = *by_name.entry(id.clone()).or_insert_with(|| {
                    identities.push(id.clone());
                    positions.push(Vec::new());
                    identities.len() - 1
                });
                positions[k].push(i);
            }
            None => unidentified.push(i),
        }
    }
    IdentityIndex {
        identities,
        positions,
        by_name,
        unidentified,
    }
}

/// Per-attribute fraction of positive labels over some subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositiveRatioVector {
    ratios: Vec<f64>,
}

impl PositiveRatioVector {
    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    pub fn ratio(&self, j: usize) -> f64 {
        self.ratios[j]
    }

    pub fn len(&self) -> usize {
        self.ratios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratios.is_empty()
    }

    pub fn from_ratios(ratios: Vec<f64>) -> Self {
        Self { ratios }
    }
}

/// Positive label ratio of every attribute over the given sample positions.
pub fn positive_ratio(dataset: &Dataset, subset: &[usize]) -> Result<PositiveRatioVector, DatasetError> {
    if subset.is_empty() {
        return Err(DatasetError::EmptySubset);
    }
    let m = dataset.n_attributes();
    let mut counts = vec![0u64; m];
    for &pos in subset {
        let sample = dataset
            .samples()
            .get(pos)
            .ok_or(DatasetError::PositionOutOfRange(pos))?;
        for (count, &label) in counts.iter_mut().zip(&sample.labels) {
            *count += u64::from(label);
        }
    }
    let n = subset.len() as f64;
    Ok(PositiveRatioVector {
        ratios: counts.iter().map(|&c| c as f64 / n).collect(),
    })
}

/// Per-attribute positive counts over a subset; the integer core of
/// [`positive_ratio`], also used by the split search to avoid re-scanning
/// samples on every trial.
pub fn positive_counts(dataset: &Dataset, subset: &[usize]) -> Vec<u64> {
    let mut counts = vec![0u64; dataset.n_attributes()];
    for &pos in subset {
        for (count, &label) in counts.iter_mut().zip(&dataset.samples()[pos].labels) {
            *count += u64::from(label);
        }
    }
    counts
}

/// What [`prune`] removed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneReport {
    pub dropped_attributes: Vec<String>,
    pub dropped_samples: usize,
}

/// Remove unidentified samples and/or under-represented attributes.
///
/// If `drop_unidentified` is set, samples without an identity are removed
/// first; attributes with fewer than `min_positive` positive labels over the
/// remaining samples are then dropped from the schema and every label
/// vector. `min_positive = 1` removes exactly the zero-positive attributes.
pub fn prune(
    dataset: &Dataset,
    drop_unidentified: bool,
    min_positive: usize,
) -> Result<(Dataset, PruneReport), DatasetError> {
    let kept_samples: Vec<&Sample> = dataset
        .samples()
        .iter()
        .filter(|s| !drop_unidentified || s.identity_id.is_some())
        .collect();
    if kept_samples.is_empty() {
        return Err(DatasetError::AllSamplesPruned);
    }
    let dropped_samples = dataset.len() - kept_samples.len();

    let m = dataset.n_attributes();
    let mut counts = vec![0usize; m];
    for sample in &kept_samples {
        for (count, &label) in counts.iter_mut().zip(&sample.labels) {
            *count += usize::from(label);
        }
    }
    let kept_attrs: Vec<usize> = (0..m).filter(|&j| counts[j] >= min_positive).collect();
    if kept_attrs.is_empty() {
        return Err(DatasetError::AllAttributesPruned);
    }
    let dropped_attributes: Vec<String> = (0..m)
        .filter(|j| !kept_attrs.contains(j))
        .map(|j| dataset.schema().name(j).to_owned())
        .collect();

    if dropped_samples == 0 && dropped_attributes.is_empty() {
        return Ok((
            dataset.clone(),
            PruneReport {
                dropped_attributes,
                dropped_samples,
            },
        ));
    }

    let schema = AttributeSchema::new(
        kept_attrs
            .iter()
            .map(|&j| dataset.schema().name(j).to_owned())
            .collect(),
    )?;
    let samples = kept_samples
        .into_iter()
        .map(|s| Sample {
            image_id: s.image_id.clone(),
            identity_id: s.identity_id.clone(),
            labels: kept_attrs.iter().map(|&j| s.labels[j]).collect(),
        })
        .collect();
    let pruned = Dataset::new(schema, samples)?;
    Ok((
        pruned,
        PruneReport {
            dropped_attributes,
            dropped_samples,
        },
    ))
}

/// Mean of `positive_ratio` columns weighted by subset sizes; used to check
/// that ratios over a partition recombine to the whole-set ratio.
pub fn weighted_ratio_mean(parts: &[(&PositiveRatioVector, usize)]) -> PositiveRatioVector {
    let m = parts.first().map_or(0, |(r, _)| r.len());
    let total: usize = parts.iter().map(|(_, n)| n).sum();
    let ratios = (0..m)
        .map(|j| {
            let terms: Vec<f64> = parts
                .iter()
                .map(|(r, n)| r.ratio(j) * *n as f64)
                .collect();
            pairwise_sum(&terms) / total as f64
        })
        .collect();
    PositiveRatioVector { ratios }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn toy_dataset(identities: &[Option<&str>], labels: &[&[u8]]) -> Dataset {
        let m = labels[0].len();
        let schema =
            AttributeSchema::new((0..m).map(|j| format!("attr{j}")).collect()).unwrap();
        let samples = identities
            .iter()
            .enumerate()
            .map(|(i, id)| Sample {
                image_id: format!("img{i}"),
                identity_id: id.map(str::to_owned),
                labels: labels[i].to_vec(),
            })
            .collect();
        Dataset::new(schema, samples).unwrap()
    }

    #[test]
    fn index_groups_by_identity() {
        let ds = toy_dataset(
            &[Some("a"), Some("a"), Some("b")],
            &[&[0], &[1], &[0]],
        );
        let idx = build_identity_index(&ds);
        assert_eq!(idx.n_identities(), 2);
        assert_eq!(idx.positions(idx.lookup("a").unwrap()), &[0, 1]);
        assert_eq!(idx.positions(idx.lookup("b").unwrap()), &[2]);
        assert!(idx.unidentified().is_empty());
    }

    #[test]
    fn index_collects_unidentified() {
        let ds = toy_dataset(&[Some("a"), None], &[&[0], &[1]]);
        let idx = build_identity_index(&ds);
        assert_eq!(idx.n_identities(), 1);
        assert_eq!(idx.positions(0), &[0]);
        assert_eq!(idx.unidentified(), &[1]);
    }

    #[test]
    fn index_flattens_back_to_all_positions() {
        let ds = toy_dataset(
            &[Some("a"), None, Some("b"), Some("a"), None],
            &[&[0], &[1], &[0], &[1], &[0]],
        );
        let idx = build_identity_index(&ds);
        let mut all: Vec<usize> = idx.unidentified().to_vec();
        for k in 0..idx.n_identities() {
            all.extend_from_slice(idx.positions(k));
        }
        all.sort_unstable();
        assert_eq!(all, (0..ds.len()).collect::<Vec<_>>());
    }

    #[test]
    fn ratio_saturated_column() {
        let ds = toy_dataset(&[Some("a"), Some("b")], &[&[1, 0], &[1, 1]]);
        let r = positive_ratio(&ds, &[0, 1]).unwrap();
        assert_eq!(r.ratio(0), 1.0);
        assert_eq!(r.ratio(1), 0.5);
    }

    #[test]
    fn ratio_half_by_symmetry() {
        let ds = toy_dataset(
            &[None, None, None, None],
            &[&[1], &[0], &[0], &[1]],
        );
        let r = positive_ratio(&ds, &[0, 1, 2, 3]).unwrap();
        assert_eq!(r.ratio(0), 0.5);
    }

    #[test]
    fn ratio_rejects_empty_subset() {
        let ds = toy_dataset(&[Some("a")], &[&[1]]);
        assert_eq!(positive_ratio(&ds, &[]), Err(DatasetError::EmptySubset));
    }

    #[test]
    fn ratio_rejects_bad_position() {
        let ds = toy_dataset(&[Some("a")], &[&[1]]);
        assert_eq!(
            positive_ratio(&ds, &[5]),
            Err(DatasetError::PositionOutOfRange(5))
        );
    }

    #[test]
    fn prune_removes_zero_positive_attribute() {
        let ds = toy_dataset(&[Some("a"), Some("b")], &[&[1, 0], &[1, 0]]);
        let (pruned, report) = prune(&ds, false, 1).unwrap();
        assert_eq!(pruned.n_attributes(), 1);
        assert_eq!(report.dropped_attributes, vec!["attr1".to_owned()]);
        assert_eq!(report.dropped_samples, 0);
    }

    #[test]
    fn prune_noop_leaves_dataset_unchanged() {
        let ds = toy_dataset(&[Some("a"), None], &[&[1, 0], &[0, 0]]);
        let (pruned, report) = prune(&ds, false, 0).unwrap();
        assert_eq!(pruned, ds);
        assert!(report.dropped_attributes.is_empty());
        assert_eq!(report.dropped_samples, 0);
    }

    #[test]
    fn prune_drops_unidentified_then_recounts() {
        // attr0 is positive only on the unidentified sample, so dropping
        // unidentified samples must also drop attr0.
        let ds = toy_dataset(&[None, Some("a")], &[&[1, 1], &[0, 1]]);
        let (pruned, report) = prune(&ds, true, 1).unwrap();
        assert_eq!(pruned.len(), 1);
        assert_eq!(report.dropped_samples, 1);
        assert_eq!(report.dropped_attributes, vec!["attr0".to_owned()]);
        assert_eq!(pruned.schema().names(), &["attr1".to_owned()]);
    }

    #[test]
    fn prune_rejects_emptying_schema() {
        let ds = toy_dataset(&[Some("a")], &[&[0, 0]]);
        assert!(matches!(
            prune(&ds, false, 1),
            Err(DatasetError::AllAttributesPruned)
        ));
    }

    #[test]
    fn prune_rejects_emptying_samples() {
        let ds = toy_dataset(&[None, None], &[&[1], &[0]]);
        assert!(matches!(
            prune(&ds, true, 0),
            Err(DatasetError::AllSamplesPruned)
        ));
    }

    #[test]
    fn prune_is_idempotent() {
        let ds = toy_dataset(
            &[None, Some("a"), Some("b")],
            &[&[1, 0, 1], &[0, 0, 1], &[1, 0, 0]],
        );
        let (once, _) = prune(&ds, true, 1).unwrap();
        let (twice, report) = prune(&once, true, 1).unwrap();
        assert_eq!(once, twice);
        assert!(report.dropped_attributes.is_empty());
        assert_eq!(report.dropped_samples, 0);
    }

    #[test]
    fn dataset_rejects_ragged_labels() {
        let schema = AttributeSchema::new(vec!["a".into(), "b".into()]).unwrap();
        let samples = vec![Sample {
            image_id: "x".into(),
            identity_id: None,
            labels: vec![1],
        }];
        assert!(matches!(
            Dataset::new(schema, samples),
            Err(DatasetError::LabelLengthMismatch { .. })
        ));
    }

    #[test]
    fn dataset_rejects_duplicate_image_ids() {
        let schema = AttributeSchema::new(vec!["a".into()]).unwrap();
        let samples = vec![
            Sample {
                image_id: "x".into(),
                identity_id: None,
                labels: vec![1],
            },
            Sample {
                image_id: "x".into(),
                identity_id: None,
                labels: vec![0],
            },
        ];
        assert!(matches!(
            Dataset::new(schema, samples),
            Err(DatasetError::DuplicateImageId(_))
        ));
    }

    #[test]
    fn schema_rejects_duplicates_and_empty() {
        assert!(matches!(
            AttributeSchema::new(vec![]),
            Err(DatasetError::EmptySchema)
        ));
        assert!(matches!(
            AttributeSchema::new(vec!["a".into(), "a".into()]),
            Err(DatasetError::DuplicateAttribute(_))
        ));
    }
}
