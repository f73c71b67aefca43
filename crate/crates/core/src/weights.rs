//! Class-imbalance weighting and weighted binary cross-entropy.
//!
//! Rare attributes drown in negative examples under a plain cross-entropy
//! loss. The weight functions here scale the positive and negative terms of
//! each attribute from its positive ratio in the training set, boosting the
//! minority side. The loss itself exists for numeric verification and for
//! exporting weight tables to external trainers; no training happens in
//! this crate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::PositiveRatioVector;
use crate::metrics::{LabelMatrix, PredictionSet};
use crate::numeric::{pairwise_mean, pairwise_sum};

/// Probabilities are clamped to `[CLAMP_EPSILON, 1 - CLAMP_EPSILON]` before
/// logarithms.
pub const CLAMP_EPSILON: f64 = 1e-7;

#[derive(Debug, Error, PartialEq)]
pub enum WeightsError {
    #[error("ratio {ratio} of attribute {index} is degenerate for {kind}: must lie strictly in (0, 1)")]
    DegenerateRatio {
        index: usize,
        ratio: f64,
        kind: String,
    },
    #[error("ratio {ratio} of attribute {index} outside [0, 1]")]
    RatioOutOfRange { index: usize, ratio: f64 },
    #[error("alpha must be a finite nonnegative number, got {0}")]
    InvalidAlpha(f64),
    #[error("shape mismatch: probabilities {probs}, labels {labels}, weights {weights} attributes")]
    ShapeMismatch {
        probs: usize,
        labels: usize,
        weights: usize,
    },
    #[error("sample counts differ: probabilities {probs}, labels {labels}")]
    SampleCountMismatch { probs: usize, labels: usize },
}

/// Which weighting rule to apply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WeightFunction {
    /// Uniform weights 1; plain binary cross-entropy.
    None,
    /// Exponential of the opposite ratio: `w_pos = e^(1-r)`, `w_neg = e^r`.
    Wf1,
    /// Inverse square root: `w_pos = sqrt(1/(2r))`, `w_neg = sqrt(1/(2(1-r)))`.
    Wf2,
    /// Normalized inverse-ratio powers: `w_pos = (1/r)^a / ((1/r)^a + (1/(1-r))^a)`
    /// and the complementary expression for `w_neg`; `alpha` trades off how
    /// hard the minority side is boosted.
    Wf3 { alpha: f64 },
}

impl WeightFunction {
    pub fn name(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Wf1 => "wf1",
            Self::Wf2 => "wf2",
            Self::Wf3 { .. } => "wf3",
        }
    }

    /// WF2 and WF3 divide by `r` and `1 - r`; WF1 tolerates the endpoints.
    fn requires_open_interval(&self) -> bool {
        matches!(self, Self::Wf2 | Self::Wf3 { .. })
    }
}

/// Per-attribute weight pair for positive and negative terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightPair {
    pub pos: f64,
    pub neg: f64,
}

/// Weight pairs for every attribute plus the ratios they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightTable {
    function: WeightFunction,
    ratios: Vec<f64>,
    pairs: Vec<WeightPair>,
}

impl WeightTable {
    pub fn function(&self) -> &WeightFunction {
        &self.function
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    pub fn pairs(&self) -> &[WeightPair] {
        &self.pairs
    }

    pub fn n_attrs(&self) -> usize {
        self.pairs.len()
    }

    /// Weight of one label cell: the positive weight when the label is set,
    /// the negative weight otherwise.
    pub fn weight(&self, attr: usize, label: u8) -> f64 {
        let pair = &self.pairs[attr];
        if label == 1 {
            pair.pos
        } else {
            pair.neg
        }
    }

    /// Uniform table (weight 1 everywhere) for plain cross-entropy.
    pub fn uniform(n_attrs: usize) -> Self {
        Self {
            function: WeightFunction::None,
            ratios: Vec::new(),
            pairs: vec![WeightPair { pos: 1.0, neg: 1.0 }; n_attrs],
        }
    }

    /// Rebuild from parts, re-validating against the stated function.
    /// Used by the file reader.
    pub fn from_parts(
        function: WeightFunction,
        ratios: Vec<f64>,
        pairs: Vec<WeightPair>,
    ) -> Result<Self, WeightsError> {
        validate_ratios(&ratios, &function)?;
        if !matches!(function, WeightFunction::None) && pairs.len() != ratios.len() {
            return Err(WeightsError::ShapeMismatch {
                probs: 0,
                labels: ratios.len(),
                weights: pairs.len(),
            });
        }
        Ok(Self {
            function,
            ratios,
            pairs,
        })
    }
}

fn validate_ratios(ratios: &[f64], function: &WeightFunction) -> Result<(), WeightsError> {
    if let WeightFunction::Wf3 { alpha } = function {
        if !(alpha.is_finite() && *alpha >= 0.0) {
            return Err(WeightsError::InvalidAlpha(*alpha));
        }
    }
    for (index, &ratio) in ratios.iter().enumerate() {
        if !(0.0..=1.0).contains(&ratio) {
            return Err(WeightsError::RatioOutOfRange { index, ratio });
        }
        if function.requires_open_interval() && (ratio == 0.0 || ratio == 1.0) {
            return Err(WeightsError::DegenerateRatio {
                index,
                ratio,
                kind: function.name().to_owned(),
            });
        }
    }
    Ok(())
}

/// Compute the weight pair of every attribute from its positive ratio.
///
/// Ratios should come from the training subset.
pub fn compute_weights(
    ratios: &PositiveRatioVector,
    function: WeightFunction,
) -> Result<WeightTable, WeightsError> {
    validate_ratios(ratios.ratios(), &function)?;
    let pairs = ratios
        .ratios()
        .iter()
        .map(|&r| match function {
            WeightFunction::None => WeightPair { pos: 1.0, neg: 1.0 },
            WeightFunction::Wf1 => WeightPair {
                pos: (1.0 - r).exp(),
                neg: r.exp(),
            },
            WeightFunction::Wf2 => WeightPair {
                pos: (1.0 / (2.0 * r)).sqrt(),
                neg: (1.0 / (2.0 * (1.0 - r))).sqrt(),
            },
            WeightFunction::Wf3 { alpha } => {
                // (1/r)^a / ((1/r)^a + (1/(1-r))^a), rescaled by (r(1-r))^a
                // so both powers stay in (0, 1] and cannot overflow.
                let pos_term = (1.0 - r).powf(alpha);
                let neg_term = r.powf(alpha);
                let denom = pos_term + neg_term;
                WeightPair {
                    pos: pos_term / denom,
                    neg: neg_term / denom,
                }
            }
        })
        .collect();
    Ok(WeightTable {
        function,
        ratios: ratios.ratios().to_vec(),
        pairs,
    })
}

/// Weighted binary cross-entropy of a probability matrix against labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BceLoss {
    /// Sum over attributes of the weighted cross-entropy terms, per sample.
    pub per_sample: Vec<f64>,
    /// Mean of `per_sample`.
    pub mean_per_sample: f64,
    /// Same total averaged over all N*M label cells instead; reported
    /// alongside because conventions differ between codebases.
    pub mean_per_element: f64,
    pub clamp_epsilon: f64,
}

fn check_loss_shapes(
    probs: &PredictionSet,
    labels: &LabelMatrix,
    weights: &WeightTable,
) -> Result<(), WeightsError> {
    if probs.n_attrs() != labels.n_attrs() || weights.n_attrs() != labels.n_attrs() {
        return Err(WeightsError::ShapeMismatch {
            probs: probs.n_attrs(),
            labels: labels.n_attrs(),
            weights: weights.n_attrs(),
        });
    }
    if probs.n_samples() != labels.n_samples() {
        return Err(WeightsError::SampleCountMismatch {
            probs: probs.n_samples(),
            labels: labels.n_samples(),
        });
    }
    Ok(())
}

fn clamp(p: f64) -> f64 {
    p.clamp(CLAMP_EPSILON, 1.0 - CLAMP_EPSILON)
}

/// `L_i = -sum_j w_j(y_ij) * [y_ij ln p_ij + (1 - y_ij) ln(1 - p_ij)]`,
/// with probabilities clamped away from 0 and 1 before the logarithms.
pub fn weighted_bce(
    probs: &PredictionSet,
    labels: &LabelMatrix,
    weights: &WeightTable,
) -> Result<BceLoss, WeightsError> {
    check_loss_shapes(probs, labels, weights)?;
    let (n, m) = (labels.n_samples(), labels.n_attrs());
    let mut per_sample = Vec::with_capacity(n);
    let mut terms = Vec::with_capacity(m);
    for i in 0..n {
        terms.clear();
        let row = probs.row(i);
        for j in 0..m {
            let y = labels.label(i, j);
            let p = clamp(row[j]);
            let ll = if y == 1 { p.ln() } else { (1.0 - p).ln() };
            terms.push(-weights.weight(j, y) * ll);
        }
        per_sample.push(pairwise_sum(&terms));
    }
    let mean_per_sample = pairwise_mean(&per_sample).unwrap_or(0.0);
    let mean_per_element = mean_per_sample / m as f64;
    Ok(BceLoss {
        per_sample,
        mean_per_sample,
        mean_per_element,
        clamp_epsilon: CLAMP_EPSILON,
    })
}

/// Analytic `dL_i/dp_ij` as a row-major N×M matrix.
///
/// Inside the clamp region the derivative of one cell is
/// `-w * (y/p - (1-y)/(1-p))`; where the clamp saturates, the loss is
/// locally constant in `p` and the derivative is 0.
pub fn weighted_bce_gradient(
    probs: &PredictionSet,
    labels: &LabelMatrix,
    weights: &WeightTable,
) -> Result<Vec<f64>, WeightsError> {
    check_loss_shapes(probs, labels, weights)?;
    let (n, m) = (labels.n_samples(), labels.n_attrs());
    let mut grad = Vec::with_capacity(n * m);
    for i in 0..n {
        let row = probs.row(i);
        for j in 0..m {
            let p = row[j];
            if p < CLAMP_EPSILON || p > 1.0 - CLAMP_EPSILON {
                grad.push(0.0);
                continue;
            }
            let y = labels.label(i, j);
            let w = weights.weight(j, y);
            let d = if y == 1 { 1.0 / p } else { -1.0 / (1.0 - p) };
            grad.push(-w * d);
        }
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratios(values: &[f64]) -> PositiveRatioVector {
        PositiveRatioVector::from_ratios(values.to_vec())
    }

    #[test]
    fn wf2_is_symmetric_at_half() {
        let table = compute_weights(&ratios(&[0.5]), WeightFunction::Wf2).unwrap();
        assert_eq!(table.pairs()[0], WeightPair { pos: 1.0, neg: 1.0 });
    }

    #[test]
    fn wf3_alpha_one_reduces_to_complement() {
        let table =
            compute_weights(&ratios(&[0.2]), WeightFunction::Wf3 { alpha: 1.0 }).unwrap();
        assert_eq!(table.pairs()[0].pos, 0.8);
        assert_eq!(table.pairs()[0].neg, 0.2);
    }

    #[test]
    fn wf1_matches_high_precision_oracle() {
        // exp(0.8) and exp(0.2) to 17 significant digits.
        let table = compute_weights(&ratios(&[0.2]), WeightFunction::Wf1).unwrap();
        assert!((table.pairs()[0].pos - 2.2255409284924676).abs() < 1e-12);
        assert!((table.pairs()[0].neg - 1.2214027581601699).abs() < 1e-12);
    }

    #[test]
    fn wf1_symmetric_at_half() {
        let table = compute_weights(&ratios(&[0.5]), WeightFunction::Wf1).unwrap();
        assert_eq!(table.pairs()[0].pos, table.pairs()[0].neg);
        assert!((table.pairs()[0].pos - 0.5f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn wf3_alpha_zero_is_uniform_half() {
        for r in [0.01, 0.3, 0.5, 0.97] {
            let table =
                compute_weights(&ratios(&[r]), WeightFunction::Wf3 { alpha: 0.0 }).unwrap();
            assert_eq!(table.pairs()[0], WeightPair { pos: 0.5, neg: 0.5 });
        }
    }

    #[test]
    fn minority_class_gets_heavier_weight() {
        for function in [
            WeightFunction::Wf1,
            WeightFunction::Wf2,
            WeightFunction::Wf3 { alpha: 0.7 },
        ] {
            for r in [0.05, 0.2, 0.49] {
                let table = compute_weights(&ratios(&[r]), function).unwrap();
                let pair = table.pairs()[0];
                assert!(pair.pos > pair.neg, "{function:?} at r={r}");
            }
        }
    }

    #[test]
    fn degenerate_ratio_rejected_for_dividing_functions() {
        for function in [WeightFunction::Wf2, WeightFunction::Wf3 { alpha: 1.0 }] {
            for r in [0.0, 1.0] {
                assert!(matches!(
                    compute_weights(&ratios(&[0.4, r]), function),
                    Err(WeightsError::DegenerateRatio { index: 1, .. })
                ));
            }
        }
        // WF1 tolerates the endpoints.
        assert!(compute_weights(&ratios(&[0.0, 1.0]), WeightFunction::Wf1).is_ok());
    }

    #[test]
    fn negative_alpha_rejected() {
        assert!(matches!(
            compute_weights(&ratios(&[0.5]), WeightFunction::Wf3 { alpha: -1.0 }),
            Err(WeightsError::InvalidAlpha(_))
        ));
    }

    fn prediction(rows: &[&[f64]]) -> PredictionSet {
        let m = rows[0].len();
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        PredictionSet::new((0..rows.len()).collect(), flat, m).unwrap()
    }

    fn label_matrix(rows: &[&[u8]]) -> LabelMatrix {
        LabelMatrix::from_rows(
            &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
            rows[0].len(),
        )
    }

    #[test]
    fn uninformative_probability_costs_ln_two() {
        let probs = prediction(&[&[0.5]]);
        let labels = label_matrix(&[&[1]]);
        let loss = weighted_bce(&probs, &labels, &WeightTable::uniform(1)).unwrap();
        assert!((loss.per_sample[0] - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(loss.mean_per_sample, loss.per_sample[0]);
    }

    #[test]
    fn exact_predictions_cost_at_most_the_clamp_bound() {
        let probs = prediction(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let labels = label_matrix(&[&[1, 0], &[0, 1]]);
        let table = compute_weights(&ratios(&[0.5, 0.5]), WeightFunction::Wf1).unwrap();
        let loss = weighted_bce(&probs, &labels, &table).unwrap();
        let w_max = 1.0f64.exp();
        let bound = 2.0 * w_max * -(1.0 - CLAMP_EPSILON).ln();
        for &l in &loss.per_sample {
            assert!(l >= 0.0 && l <= bound, "loss {l} above clamp bound {bound}");
        }
    }

    #[test]
    fn loss_matches_scalar_recomputation() {
        // 4x3 instance against an element-by-element scalar loop.
        let rows: Vec<Vec<f64>> = vec![
            vec![0.9, 0.1, 0.6],
            vec![0.2, 0.8, 0.5],
            vec![0.7, 0.3, 0.01],
            vec![0.4, 0.99, 0.5],
        ];
        let label_rows: Vec<Vec<u8>> = vec![
            vec![1, 0, 1],
            vec![0, 1, 0],
            vec![1, 0, 0],
            vec![0, 1, 1],
        ];
        let probs = prediction(&rows.iter().map(|r| r.as_slice()).collect::<Vec<_>>());
        let labels = label_matrix(&label_rows.iter().map(|r| r.as_slice()).collect::<Vec<_>>());
        let table = compute_weights(&ratios(&[0.3, 0.6, 0.45]), WeightFunction::Wf2).unwrap();
        let loss = weighted_bce(&probs, &labels, &table).unwrap();
        let mut total = 0.0;
        for (i, row) in rows.iter().enumerate() {
            let mut li = 0.0;
            for (j, &p) in row.iter().enumerate() {
                let y = label_rows[i][j];
                let p = p.clamp(CLAMP_EPSILON, 1.0 - CLAMP_EPSILON);
                let w = table.weight(j, y);
                li -= w * if y == 1 { p.ln() } else { (1.0 - p).ln() };
            }
            assert!((loss.per_sample[i] - li).abs() < 1e-12);
            total += li;
        }
        assert!((loss.mean_per_sample - total / 4.0).abs() < 1e-12);
        assert!((loss.mean_per_element - total / 12.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let rows: Vec<Vec<f64>> = vec![vec![0.3, 0.75], vec![0.55, 0.12]];
        let label_rows: Vec<Vec<u8>> = vec![vec![1, 0], vec![0, 1]];
        let labels = label_matrix(&label_rows.iter().map(|r| r.as_slice()).collect::<Vec<_>>());
        let table = compute_weights(&ratios(&[0.25, 0.7]), WeightFunction::Wf1).unwrap();
        let base = prediction(&rows.iter().map(|r| r.as_slice()).collect::<Vec<_>>());
        let grad = weighted_bce_gradient(&base, &labels, &table).unwrap();
        let h = 1e-6;
        for i in 0..2 {
            for j in 0..2 {
                let mut up = rows.clone();
                let mut down = rows.clone();
                up[i][j] += h;
                down[i][j] -= h;
                let lu = weighted_bce(
                    &prediction(&up.iter().map(|r| r.as_slice()).collect::<Vec<_>>()),
                    &labels,
                    &table,
                )
                .unwrap()
                .per_sample[i];
                let ld = weighted_bce(
                    &prediction(&down.iter().map(|r| r.as_slice()).collect::<Vec<_>>()),
                    &labels,
                    &table,
                )
                .unwrap()
                .per_sample[i];
                let fd = (lu - ld) / (2.0 * h);
                assert!(
                    (grad[i * 2 + j] - fd).abs() < 1e-6,
                    "cell ({i},{j}): analytic {} vs fd {fd}",
                    grad[i * 2 + j]
                );
            }
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let probs = prediction(&[&[0.5, 0.5]]);
        let labels = label_matrix(&[&[1]]);
        assert!(matches!(
            weighted_bce(&probs, &labels, &WeightTable::uniform(1)),
            Err(WeightsError::ShapeMismatch { .. })
        ));
    }
}
