//! Synthetic identity-structured datasets and a memorization oracle.
//!
//! The generator plants the structure that makes identity-aware splitting
//! matter: every identity has a feature center and a prototype label
//! vector, and its images are noisy copies of both. A nearest-neighbor
//! predictor that simply copies the label vector of the closest training
//! image then scores far better on test images whose identity was seen in
//! training than on unseen identities, reproducing the leakage gap between
//! random and identity-disjoint splits at desk scale.

use rand::distr::Bernoulli;
use rand::Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{AttributeSchema, Dataset, Sample};
use crate::metrics::{stratified_eval, MetricsError, PredictionSet, StratifiedReports,
    ZeroDivisionPolicy};
use crate::seed::{derive_seed, stream_rng};
use crate::split::{search_split, SplitError, SplitMethod, SplitSpec, Thresholds};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Parameters of the synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub n_identities: usize,
    /// Inclusive range of images per identity.
    pub images_per_identity: (usize, usize),
    pub n_attributes: usize,
    /// Per-attribute probability that an identity's prototype label is
    /// positive; evenly spread over (0.1, 0.9) when omitted.
    pub attribute_priors: Option<Vec<f64>>,
    /// Probability that one image flips one prototype label; must stay
    /// below 0.5 so labels remain identity-dominated.
    pub flip_probability: f64,
    pub feature_dim: usize,
    /// Standard deviation of identity centers.
    pub center_scale: f64,
    /// Standard deviation of per-image feature noise around the center.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_identities: 2000,
            images_per_identity: (2, 10),
            n_attributes: 20,
            attribute_priors: None,
            flip_probability: 0.05,
            feature_dim: 32,
            center_scale: 1.0,
            noise_sigma: 0.1,
            seed: 20,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |msg: String| Err(SynthError::InvalidConfig(msg));
        if self.n_identities == 0 {
            return fail("n_identities must be positive".into());
        }
        let (lo, hi) = self.images_per_identity;
        if lo == 0 || lo > hi {
            return fail(format!("images_per_identity range ({lo}, {hi}) invalid"));
        }
        if self.n_attributes == 0 {
            return fail("n_attributes must be positive".into());
        }
        if !(0.0..0.5).contains(&self.flip_probability) {
            return fail(format!(
                "flip_probability {} must lie in [0, 0.5)",
                self.flip_probability
            ));
        }
        if self.feature_dim == 0 {
            return fail("feature_dim must be positive".into());
        }
        if !(self.center_scale > 0.0 && self.center_scale.is_finite()) {
            return fail(format!("center_scale {} must be positive", self.center_scale));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return fail(format!("noise_sigma {} must be nonnegative", self.noise_sigma));
        }
        if let Some(priors) = &self.attribute_priors {
            if priors.len() != self.n_attributes {
                return fail(format!(
                    "{} priors given for {} attributes",
                    priors.len(),
                    self.n_attributes
                ));
            }
            if let Some(&p) = priors.iter().find(|p| !(0.0 < **p && **p < 1.0)) {
                return fail(format!("attribute prior {p} must lie strictly in (0, 1)"));
            }
        }
        Ok(())
    }

    /// Priors as configured, or evenly spread over (0.1, 0.9).
    pub fn resolved_priors(&self) -> Vec<f64> {
        match &self.attribute_priors {
            Some(p) => p.clone(),
            None => {
                let m = self.n_attributes;
                (0..m)
                    .map(|j| {
                        if m == 1 {
                            0.5
                        } else {
                            0.1 + 0.8 * j as f64 / (m - 1) as f64
                        }
                    })
                    .collect()
            }
        }
    }
}

/// A generated dataset plus the per-sample feature vectors the oracle
/// searches over.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub dataset: Dataset,
    features: Vec<f32>,
    feature_dim: usize,
}

impl SynthDataset {
    pub fn new(dataset: Dataset, features: Vec<f32>, feature_dim: usize) -> Result<Self, SynthError> {
        if features.len() != dataset.len() * feature_dim {
            return Err(SynthError::InvalidConfig(format!(
                "{} feature values for {} samples of dimension {}",
                features.len(),
                dataset.len(),
                feature_dim
            )));
        }
        Ok(Self {
            dataset,
            features,
            feature_dim,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn features(&self, position: usize) -> &[f32] {
        &self.features[position * self.feature_dim..(position + 1) * self.feature_dim]
    }
}

/// Generate a dataset of noisy identity copies.
///
/// Identity `k` is generated from stream `(seed, k)`: an image count from
/// the configured range, a Gaussian feature center, a prototype label
/// vector from the priors, then per-image center noise and label flips.
pub fn generate(config: &SynthConfig) -> Result<SynthDataset, SynthError> {
    config.validate()?;
    let priors = config.resolved_priors();
    let prior_dists: Vec<Bernoulli> = priors
        .iter()
        .map(|&p| Bernoulli::new(p).expect("validated prior"))
        .collect();
    let flip = Bernoulli::new(config.flip_probability).expect("validated flip probability");
    let center_dist = Normal::new(0.0, config.center_scale).expect("validated scale");
    let noise_dist = Normal::new(0.0, config.noise_sigma).expect("validated sigma");
    let d = config.feature_dim;
    let m = config.n_attributes;
    let (lo, hi) = config.images_per_identity;

    let schema = AttributeSchema::new((0..m).map(|j| format!("attr{j:02}")).collect())
        .expect("non-empty distinct names");
    let mut samples = Vec::new();
    let mut features = Vec::new();
    for k in 0..config.n_identities {
        let mut rng = stream_rng(config.seed, k as u64);
        let n_images = rng.random_range(lo..=hi);
        let center: Vec<f64> = (0..d).map(|_| rng.sample(center_dist)).collect();
        let prototype: Vec<u8> = prior_dists.iter().map(|b| u8::from(rng.sample(*b))).collect();
        for i in 0..n_images {
            for &c in &center {
                let noise = if config.noise_sigma == 0.0 {
                    0.0
                } else {
                    rng.sample(noise_dist)
                };
                features.push((c + noise) as f32);
            }
            let labels = prototype
                .iter()
                .map(|&y| if rng.sample(flip) { 1 - y } else { y })
                .collect();
            samples.push(Sample {
                image_id: format!("id{k:05}_im{i:03}"),
                identity_id: Some(format!("id{k:05}")),
                labels,
            });
        }
    }
    let dataset = Dataset::new(schema, samples).expect("generated dataset is well-formed");
    SynthDataset::new(dataset, features, d)
}

/// Image-level random split, ignoring identities.
///
/// Fractions must be nonnegative and sum to 1; train and valid sizes are
/// floored, the remainder goes to test.
pub fn random_split(
    dataset: &Dataset,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<SplitSpec, SplitError> {
    let (ft, fv, fs) = fractions;
    let sum = ft + fv + fs;
    if !(ft >= 0.0 && fv >= 0.0 && fs >= 0.0 && (sum - 1.0).abs() <= 1e-9) {
        return Err(SplitError::InvalidFractions(fractions));
    }
    let n = dataset.len();
    let mut order: Vec<usize> = (0..n).collect();
    use rand::seq::SliceRandom;
    order.shuffle(&mut stream_rng(seed, 0));
    let n_train = (ft * n as f64).floor() as usize;
    let n_valid = ((fv * n as f64).floor() as usize).min(n - n_train);
    let train = order[..n_train].to_vec();
    let valid = order[n_train..n_train + n_valid].to_vec();
    let test = order[n_train + n_valid..].to_vec();
    SplitSpec::from_parts(
        dataset,
        train,
        valid,
        test,
        seed,
        SplitMethod::Random { fractions },
        None,
    )
}

/// Index into `train` of the nearest training sample for every test
/// sample, by squared Euclidean distance; ties break to the lowest
/// training position.
pub fn nearest_training_sample(
    synth: &SynthDataset,
    train: &[usize],
    test: &[usize],
) -> Vec<usize> {
    test.par_iter()
        .map(|&t| {
            let target = synth.features(t);
            let mut best = 0usize;
            let mut best_dist = f64::INFINITY;
            for (idx, &tr) in train.iter().enumerate() {
                let row = synth.features(tr);
                let mut dist = 0.0f64;
                for (a, b) in target.iter().zip(row) {
                    let diff = f64::from(a - b);
                    dist += diff * diff;
                }
                // Strict comparison keeps the earliest training position on
                // ties; train positions are sorted ascending.
                if dist < best_dist {
                    best_dist = dist;
                    best = idx;
                }
            }
            best
        })
        .collect()
}

/// Stratified evaluation of the nearest-neighbor label-copying predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Which split regime produced this result, e.g. `random`, `zero-shot`.
    pub regime: String,
    pub n_train: usize,
    pub n_test: usize,
    pub reports: StratifiedReports,
}

/// Predict each test sample's labels by copying its nearest training
/// sample, then evaluate with identity stratification.
pub fn memorization_oracle(
    synth: &SynthDataset,
    split: &SplitSpec,
    regime: &str,
) -> Result<OracleResult, SynthError> {
    let train = split.train();
    let test = split.test();
    assert!(!train.is_empty(), "memorization oracle needs a training set");
    let nearest = nearest_training_sample(synth, train, test);
    let m = synth.dataset.n_attributes();
    let mut data = Vec::with_capacity(test.len() * m);
    for &nn in &nearest {
        data.extend(
            synth.dataset.sample(train[nn]).labels.iter().map(|&v| f64::from(v)),
        );
    }
    let preds = PredictionSet::new(test.to_vec(), data, m)?;
    let reports = stratified_eval(
        &preds,
        &synth.dataset,
        split,
        0.5,
        ZeroDivisionPolicy::EpsZero,
        true,
    )?;
    Ok(OracleResult {
        regime: regime.to_owned(),
        n_train: train.len(),
        n_test: test.len(),
        reports,
    })
}

/// One random-vs-zero-shot comparison on a freshly generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakagePair {
    pub pair_index: usize,
    pub dataset_seed: u64,
    pub random: OracleResult,
    pub zero_shot: OracleResult,
    /// Instance F1 on the random split minus instance F1 on the zero-shot
    /// split (whole test sets).
    pub f1_gap: f64,
}

/// Paired demonstration of leakage-driven overestimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageDemo {
    pub config: SynthConfig,
    pub fractions: (f64, f64, f64),
    pub thresholds: Thresholds,
    pub pairs: Vec<LeakagePair>,
}

/// Fractions used for the random regime of the leakage demo; they mirror
/// the roughly 3:1:1 image split the identity search produces.
pub const DEMO_FRACTIONS: (f64, f64, f64) = (0.6, 0.2, 0.2);

/// Generate `n_pairs` datasets and compare the memorization oracle on an
/// image-level random split against an identity-disjoint split of each.
///
/// Pair `p` derives all of its randomness from `derive_seed(config.seed, p)`,
/// so the whole demonstration is reproducible from the config alone.
pub fn demo_leakage(
    config: &SynthConfig,
    n_pairs: usize,
    thresholds: &Thresholds,
) -> Result<LeakageDemo, SynthError> {
    config.validate()?;
    let mut pairs = Vec::with_capacity(n_pairs);
    for p in 0..n_pairs {
        let pair_seed = derive_seed(config.seed, p as u64);
        let mut pair_config = config.clone();
        pair_config.seed = derive_seed(pair_seed, 0);
        let synth = generate(&pair_config)?;
        let random =
            random_split(&synth.dataset, DEMO_FRACTIONS, derive_seed(pair_seed, 1))?;
        let zero_shot = search_split(&synth.dataset, thresholds, derive_seed(pair_seed, 2))?;
        let random_result = memorization_oracle(&synth, &random, "random")?;
        let zero_shot_result = memorization_oracle(&synth, &zero_shot, "zero-shot")?;
        let f1_gap = random_result.reports.all.f1 - zero_shot_result.reports.all.f1;
        pairs.push(LeakagePair {
            pair_index: p,
            dataset_seed: pair_config.seed,
            random: random_result,
            zero_shot: zero_shot_result,
            f1_gap,
        });
    }
    Ok(LeakageDemo {
        config: config.clone(),
        fractions: DEMO_FRACTIONS,
        thresholds: *thresholds,
        pairs,
    })
}
