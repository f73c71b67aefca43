//! Thresholded prediction and the evaluation metric suite.
//!
//! Instance-level metrics (accuracy, precision, recall, F1) average
//! per-sample confusion ratios over samples; the label-level metric mA
//! averages per-attribute positive and negative recall over attributes and
//! decomposes exactly as mA = (mPR + mNR) / 2. A leakage auditor measures
//! how much of a test set shares identities with training, and stratified
//! evaluation splits test performance into seen-identity and
//! unseen-identity subsets.
//!
//! All means use pairwise summation in double precision, so results do not
//! depend on how callers batch their data.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{build_identity_index, Dataset};
use crate::numeric::{pairwise_mean, sigmoid};
use crate::split::SplitSpec;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("shape mismatch: predictions {pred_n}x{pred_m}, labels {label_n}x{label_m}")]
    ShapeMismatch {
        pred_n: usize,
        pred_m: usize,
        label_n: usize,
        label_m: usize,
    },
    #[error("probability {value} at row {row}, column {col} outside [0, 1]")]
    ProbabilityOutOfRange { row: usize, col: usize, value: f64 },
    #[error("attribute `{0}` has no positive or no negative sample in this subset")]
    DegenerateAttribute(String),
    #[error("every attribute is degenerate in this subset")]
    AllAttributesDegenerate,
    #[error("no prediction for sample position {0}")]
    MissingPrediction(usize),
    #[error("prediction positions must be strictly ascending")]
    UnsortedPositions,
    #[error("ragged row: expected {expected} entries, got {got}")]
    RaggedRow { expected: usize, got: usize },
    #[error("classification threshold {0} outside (0, 1)")]
    InvalidThreshold(f64),
}

/// How 0/0 ratios in per-sample metrics are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroDivisionPolicy {
    /// An undefined ratio contributes 0 to the mean.
    EpsZero,
    /// An undefined ratio contributes 1 to the mean.
    One,
    /// Undefined ratios are excluded; the mean runs over the rest.
    Skip,
}

impl Default for ZeroDivisionPolicy {
    fn default() -> Self {
        Self::EpsZero
    }
}

impl ZeroDivisionPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::EpsZero => "eps-zero",
            Self::One => "one",
            Self::Skip => "skip",
        }
    }
}

/// Probability matrix bound to an ordered list of dataset sample positions.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    positions: Vec<usize>,
    data: Vec<f64>,
    n_attrs: usize,
}

impl PredictionSet {
    /// Build from row-major probabilities aligned to `positions` (strictly
    /// ascending dataset sample positions).
    pub fn new(positions: Vec<usize>, data: Vec<f64>, n_attrs: usize) -> Result<Self, MetricsError> {
        if !positions.windows(2).all(|w| w[0] < w[1]) {
            return Err(MetricsError::UnsortedPositions);
        }
        if data.len() != positions.len() * n_attrs {
            return Err(MetricsError::RaggedRow {
                expected: positions.len() * n_attrs,
                got: data.len(),
            });
        }
        for (idx, &p) in data.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(MetricsError::ProbabilityOutOfRange {
                    row: idx / n_attrs,
                    col: idx % n_attrs,
                    value: p,
                });
            }
        }
        Ok(Self {
            positions,
            data,
            n_attrs,
        })
    }

    /// Apply the logistic function element-wise to a logit matrix.
    pub fn from_logits(
        positions: Vec<usize>,
        logits: &[f64],
        n_attrs: usize,
    ) -> Result<Self, MetricsError> {
        let data = logits.iter().map(|&z| sigmoid(z)).collect();
        Self::new(positions, data, n_attrs)
    }

    pub fn n_samples(&self) -> usize {
        self.positions.len()
    }

    pub fn n_attrs(&self) -> usize {
        self.n_attrs
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_attrs..(i + 1) * self.n_attrs]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Rows for the given dataset positions, in the given order.
    pub fn select(&self, subset: &[usize]) -> Result<PredictionSet, MetricsError> {
        let mut data = Vec::with_capacity(subset.len() * self.n_attrs);
        for &pos in subset {
            let i = self
                .positions
                .binary_search(&pos)
                .map_err(|_| MetricsError::MissingPrediction(pos))?;
            data.extend_from_slice(self.row(i));
        }
        // Subset order is the caller's; positions stay ascending because
        // split parts are stored sorted.
        Self::new(subset.to_vec(), data, self.n_attrs)
    }
}

/// Binary label matrix for an ordered subset of dataset samples.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    data: Vec<u8>,
    n: usize,
    m: usize,
}

impl LabelMatrix {
    pub fn from_dataset(dataset: &Dataset, subset: &[usize]) -> Self {
        let m = dataset.n_attributes();
        let mut data = Vec::with_capacity(subset.len() * m);
        for &pos in subset {
            data.extend_from_slice(&dataset.sample(pos).labels);
        }
        Self {
            data,
            n: subset.len(),
            m,
        }
    }

    pub fn from_rows(rows: &[Vec<u8>], m: usize) -> Self {
        let mut data = Vec::with_capacity(rows.len() * m);
        for row in rows {
            assert_eq!(row.len(), m, "ragged label row");
            data.extend_from_slice(row);
        }
        Self {
            data,
            n: rows.len(),
            m,
        }
    }

    pub fn n_samples(&self) -> usize {
        self.n
    }

    pub fn n_attrs(&self) -> usize {
        self.m
    }

    pub fn label(&self, i: usize, j: usize) -> u8 {
        self.data[i * self.m + j]
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * self.m..(i + 1) * self.m]
    }
}

/// Binary prediction matrix plus the threshold that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryPredictions {
    data: Vec<u8>,
    n: usize,
    m: usize,
    threshold: f64,
}

impl BinaryPredictions {
    pub fn from_rows(rows: &[Vec<u8>], m: usize, threshold: f64) -> Self {
        let mut data = Vec::with_capacity(rows.len() * m);
        for row in rows {
            assert_eq!(row.len(), m, "ragged prediction row");
            debug_assert!(row.iter().all(|&v| v <= 1));
            data.extend_from_slice(row);
        }
        Self {
            data,
            n: rows.len(),
            m,
            threshold,
        }
    }

    pub fn n_samples(&self) -> usize {
        self.n
    }

    pub fn n_attrs(&self) -> usize {
        self.m
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.data[i * self.m + j]
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    /// Rows `rows[i]` for each i, keeping the threshold tag.
    pub fn take_rows(&self, rows: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * self.m);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        Self {
            data,
            n: rows.len(),
            m: self.m,
            threshold: self.threshold,
        }
    }
}

/// Binarize probabilities: positive iff `p >= t_cls` (boundary inclusive).
pub fn threshold_predictions(
    probs: &PredictionSet,
    t_cls: f64,
) -> Result<BinaryPredictions, MetricsError> {
    if !(t_cls > 0.0 && t_cls < 1.0) {
        return Err(MetricsError::InvalidThreshold(t_cls));
    }
    let data = probs.data.iter().map(|&p| u8::from(p >= t_cls)).collect();
    Ok(BinaryPredictions {
        data,
        n: probs.n_samples(),
        m: probs.n_attrs,
        threshold: t_cls,
    })
}

/// Per-attribute confusion counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AttributeCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_count: u64,
}

/// Per-sample confusion counts (true negatives play no role in the
/// instance-level metrics).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SampleCounts {
    pub tp: u32,
    pub fp: u32,
    pub fn_count: u32,
}

/// Confusion cells aggregated along both axes.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionCounts {
    pub per_attribute: Vec<AttributeCounts>,
    pub per_sample: Vec<SampleCounts>,
}

pub fn confusion_counts(
    preds: &BinaryPredictions,
    labels: &LabelMatrix,
) -> Result<ConfusionCounts, MetricsError> {
    check_shapes(preds, labels)?;
    let (n, m) = (labels.n, labels.m);
    let mut per_attribute = vec![AttributeCounts::default(); m];
    let mut per_sample = vec![SampleCounts::default(); n];
    for i in 0..n {
        for j in 0..m {
            let y = labels.label(i, j);
            let p = preds.get(i, j);
            let attr = &mut per_attribute[j];
            let sample = &mut per_sample[i];
            match (y, p) {
                (1, 1) => {
                    attr.tp += 1;
                    sample.tp += 1;
                }
                (0, 0) => attr.tn += 1,
                (0, 1) => {
                    attr.fp += 1;
                    sample.fp += 1;
                }
                (1, 0) => {
                    attr.fn_count += 1;
                    sample.fn_count += 1;
                }
                _ => unreachable!("labels validated binary"),
            }
        }
    }
    Ok(ConfusionCounts {
        per_attribute,
        per_sample,
    })
}

fn check_shapes(preds: &BinaryPredictions, labels: &LabelMatrix) -> Result<(), MetricsError> {
    if preds.n != labels.n || preds.m != labels.m {
        return Err(MetricsError::ShapeMismatch {
            pred_n: preds.n,
            pred_m: preds.m,
            label_n: labels.n,
            label_m: labels.m,
        });
    }
    Ok(())
}

/// Sample-averaged metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn policy_mean(
    counts: &[SampleCounts],
    policy: ZeroDivisionPolicy,
    numerator: impl Fn(&SampleCounts) -> u32,
    denominator: impl Fn(&SampleCounts) -> u32,
) -> f64 {
    let mut terms = Vec::with_capacity(counts.len());
    for c in counts {
        let den = denominator(c);
        if den == 0 {
            match policy {
                ZeroDivisionPolicy::EpsZero => terms.push(0.0),
                ZeroDivisionPolicy::One => terms.push(1.0),
                ZeroDivisionPolicy::Skip => {}
            }
        } else {
            terms.push(f64::from(numerator(c)) / f64::from(den));
        }
    }
    pairwise_mean(&terms).unwrap_or(0.0)
}

/// Accuracy, precision and recall averaged over samples; F1 is the harmonic
/// mean of the aggregate precision and recall.
pub fn instance_metrics(
    preds: &BinaryPredictions,
    labels: &LabelMatrix,
    policy: ZeroDivisionPolicy,
) -> Result<(InstanceMetrics, Vec<SampleCounts>), MetricsError> {
    let counts = confusion_counts(preds, labels)?.per_sample;
    let metrics = instance_metrics_from_counts(&counts, policy);
    Ok((metrics, counts))
}

pub fn instance_metrics_from_counts(
    counts: &[SampleCounts],
    policy: ZeroDivisionPolicy,
) -> InstanceMetrics {
    let accuracy = policy_mean(counts, policy, |c| c.tp, |c| c.tp + c.fp + c.fn_count);
    let precision = policy_mean(counts, policy, |c| c.tp, |c| c.tp + c.fp);
    let recall = policy_mean(counts, policy, |c| c.tp, |c| c.tp + c.fn_count);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    InstanceMetrics {
        accuracy,
        precision,
        recall,
        f1,
    }
}

/// Recall pair of one attribute, with its confusion cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeReport {
    pub name: String,
    #[serde(flatten)]
    pub counts: AttributeCounts,
    /// TP / (TP + FN); `None` when the attribute has no positives here.
    pub positive_recall: Option<f64>,
    /// TN / (TN + FP); `None` when the attribute has no negatives here.
    pub negative_recall: Option<f64>,
}

/// Attribute-averaged metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub ma: f64,
    pub m_pr: f64,
    pub m_nr: f64,
    pub per_attribute: Vec<AttributeReport>,
    /// Attributes excluded from the averages for lacking a positive or a
    /// negative sample (only under `skip_degenerate`).
    pub skipped_attributes: Vec<String>,
}

/// Mean positive/negative recall over attributes and their mean mA.
///
/// An attribute without a single positive (or negative) sample has an
/// undefined recall; that is an error unless `skip_degenerate` is set, in
/// which case the attribute is dropped from both averages.
pub fn label_metrics(
    preds: &BinaryPredictions,
    labels: &LabelMatrix,
    attribute_names: &[String],
    skip_degenerate: bool,
) -> Result<LabelMetrics, MetricsError> {
    let counts = confusion_counts(preds, labels)?.per_attribute;
    label_metrics_from_counts(&counts, attribute_names, skip_degenerate)
}

pub fn label_metrics_from_counts(
    counts: &[AttributeCounts],
    attribute_names: &[String],
    skip_degenerate: bool,
) -> Result<LabelMetrics, MetricsError> {
    let mut per_attribute = Vec::with_capacity(counts.len());
    let mut pos_recalls = Vec::with_capacity(counts.len());
    let mut neg_recalls = Vec::with_capacity(counts.len());
    let mut skipped = Vec::new();
    for (j, c) in counts.iter().enumerate() {
        let name = attribute_names[j].clone();
        let positives = c.tp + c.fn_count;
        let negatives = c.tn + c.fp;
        if positives == 0 || negatives == 0 {
            if !skip_degenerate {
                return Err(MetricsError::DegenerateAttribute(name));
            }
            skipped.push(name.clone());
            per_attribute.push(AttributeReport {
                name,
                counts: *c,
                positive_recall: (positives > 0).then(|| c.tp as f64 / positives as f64),
                negative_recall: (negatives > 0).then(|| c.tn as f64 / negatives as f64),
            });
            continue;
        }
        let pr = c.tp as f64 / positives as f64;
        let nr = c.tn as f64 / negatives as f64;
        pos_recalls.push(pr);
        neg_recalls.push(nr);
        per_attribute.push(AttributeReport {
            name,
            counts: *c,
            positive_recall: Some(pr),
            negative_recall: Some(nr),
        });
    }
    let m_pr = pairwise_mean(&pos_recalls).ok_or(MetricsError::AllAttributesDegenerate)?;
    let m_nr = pairwise_mean(&neg_recalls).expect("same length as positive recalls");
    Ok(LabelMetrics {
        ma: (m_pr + m_nr) / 2.0,
        m_pr,
        m_nr,
        per_attribute,
        skipped_attributes: skipped,
    })
}

/// Full evaluation result for one subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// What was evaluated, e.g. `test`, `test/common-identity`.
    pub subset: String,
    pub n_samples: usize,
    pub threshold: f64,
    pub zero_division: ZeroDivisionPolicy,
    pub ma: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub m_pr: f64,
    pub m_nr: f64,
    pub per_attribute: Vec<AttributeReport>,
    pub skipped_attributes: Vec<String>,
}

/// Evaluate binary predictions against labels on one subset.
pub fn evaluate(
    preds: &BinaryPredictions,
    labels: &LabelMatrix,
    attribute_names: &[String],
    policy: ZeroDivisionPolicy,
    skip_degenerate: bool,
    subset: &str,
) -> Result<MetricsReport, MetricsError> {
    let confusion = confusion_counts(preds, labels)?;
    let instance = instance_metrics_from_counts(&confusion.per_sample, policy);
    let label = label_metrics_from_counts(&confusion.per_attribute, attribute_names, skip_degenerate)?;
    Ok(MetricsReport {
        subset: subset.to_owned(),
        n_samples: labels.n,
        threshold: preds.threshold,
        zero_division: policy,
        ma: label.ma,
        accuracy: instance.accuracy,
        precision: instance.precision,
        recall: instance.recall,
        f1: instance.f1,
        m_pr: label.m_pr,
        m_nr: label.m_nr,
        per_attribute: label.per_attribute,
        skipped_attributes: label.skipped_attributes,
    })
}

/// How much of the test set shares identities with training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageAudit {
    /// Identities present in both train and test, in dataset order.
    pub common_identities: Vec<String>,
    pub n_common_identities: usize,
    pub test_size: usize,
    /// Test images whose identity also appears in train.
    pub common_images: usize,
    /// Test images whose identity appears only outside train.
    pub unique_images: usize,
    /// Test images without an identity label; they may or may not leak.
    pub unidentified_images: usize,
    /// common_images / test_size: the provable leakage floor.
    pub common_fraction: f64,
    /// (common_images + unidentified_images) / test_size: the ceiling if
    /// every unidentified image leaked.
    pub common_fraction_upper: f64,
}

/// Intersect train and test identities and count affected test images.
pub fn audit_leakage(dataset: &Dataset, split: &SplitSpec) -> LeakageAudit {
    let index = build_identity_index(dataset);
    let train_ids: HashSet<&str> = split
        .train()
        .iter()
        .filter_map(|&pos| dataset.sample(pos).identity_id.as_deref())
        .collect();
    let mut common_flags = vec![false; index.n_identities()];
    let mut common_images = 0usize;
    let mut unique_images = 0usize;
    let mut unidentified_images = 0usize;
    for &pos in split.test() {
        match dataset.sample(pos).identity_id.as_deref() {
            Some(id) if train_ids.contains(id) => {
                common_flags[index.lookup(id).expect("identity indexed")] = true;
                common_images += 1;
            }
            Some(_) => unique_images += 1,
            None => unidentified_images += 1,
        }
    }
    let common_identities: Vec<String> = (0..index.n_identities())
        .filter(|&k| common_flags[k])
        .map(|k| index.identity(k).to_owned())
        .collect();
    let test_size = split.test().len();
    let frac = |count: usize| {
        if test_size == 0 {
            0.0
        } else {
            count as f64 / test_size as f64
        }
    };
    LeakageAudit {
        n_common_identities: common_identities.len(),
        common_identities,
        test_size,
        common_images,
        unique_images,
        unidentified_images,
        common_fraction: frac(common_images),
        common_fraction_upper: frac(common_images + unidentified_images),
    }
}

/// Test-set evaluation broken down by identity overlap with training.
///
/// `common` and `unique` are `None` when the corresponding stratum is
/// empty; `all` always covers the full test set, including unidentified
/// images that belong to neither stratum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedReports {
    pub all: MetricsReport,
    pub common: Option<MetricsReport>,
    pub unique: Option<MetricsReport>,
    pub n_common: usize,
    pub n_unique: usize,
    pub n_unidentified: usize,
}

/// Evaluate the test set as a whole and per identity stratum.
///
/// `preds` must cover every test position of the split.
pub fn stratified_eval(
    preds: &PredictionSet,
    dataset: &Dataset,
    split: &SplitSpec,
    t_cls: f64,
    policy: ZeroDivisionPolicy,
    skip_degenerate: bool,
) -> Result<StratifiedReports, MetricsError> {
    let test_preds = preds.select(split.test())?;
    let binary = threshold_predictions(&test_preds, t_cls)?;
    let labels = LabelMatrix::from_dataset(dataset, split.test());
    let names = dataset.schema().names();

    let train_ids: HashSet<&str> = split
        .train()
        .iter()
        .filter_map(|&pos| dataset.sample(pos).identity_id.as_deref())
        .collect();
    let mut common_rows = Vec::new();
    let mut unique_rows = Vec::new();
    let mut n_unidentified = 0usize;
    for (row, &pos) in split.test().iter().enumerate() {
        match dataset.sample(pos).identity_id.as_deref() {
            Some(id) if train_ids.contains(id) => common_rows.push(row),
            Some(_) => unique_rows.push(row),
            None => n_unidentified += 1,
        }
    }

    let all = evaluate(&binary, &labels, names, policy, skip_degenerate, "test")?;
    let stratum = |rows: &[usize], tag: &str| -> Result<Option<MetricsReport>, MetricsError> {
        if rows.is_empty() {
            return Ok(None);
        }
        let sub_preds = binary.take_rows(rows);
        let sub_labels = LabelMatrix::from_rows(
            &rows.iter().map(|&r| labels.row(r).to_vec()).collect::<Vec<_>>(),
            labels.m,
        );
        evaluate(&sub_preds, &sub_labels, names, policy, skip_degenerate, tag).map(Some)
    };
    let common = stratum(&common_rows, "test/common-identity")?;
    let unique = stratum(&unique_rows, "test/unique-identity")?;
    Ok(StratifiedReports {
        all,
        common,
        unique,
        n_common: common_rows.len(),
        n_unique: unique_rows.len(),
        n_unidentified,
    })
}
