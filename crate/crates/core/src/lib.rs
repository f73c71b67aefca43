//! Core library for identity-disjoint dataset partitioning and multi-label
//! attribute evaluation.
//!
//! The crate is organized around a small immutable domain model:
//!
//! - [`dataset`] — attribute schemas, labeled samples, identity indexing and
//!   positive-ratio statistics.
//! - [`io`] — canonical line-delimited file formats for datasets, splits,
//!   predictions and weight tables, with SHA-256 checksums binding artifacts
//!   to the exact dataset they were derived from.
//! - [`split`] — the randomized identity-disjoint splitting search and an
//!   independent criteria verifier.
//! - [`metrics`] — thresholded predictions, instance- and label-level
//!   evaluation, leakage auditing and identity-stratified reports.
//! - [`weights`] — class-imbalance weight functions and the weighted binary
//!   cross-entropy they feed.
//! - [`synth`] — synthetic identity-structured dataset generation and a
//!   nearest-neighbor memorization oracle for demonstrating leakage.
//!
//! All operations are pure functions over immutable values; everything is
//! safe to call concurrently, and every randomized operation is fully
//! determined by its explicit seed.

pub mod dataset;
pub mod io;
pub mod metrics;
pub mod numeric;
pub mod seed;
pub mod split;
pub mod synth;
pub mod weights;

pub use dataset::{
    build_identity_index, positive_ratio, prune, AttributeSchema, Dataset, DatasetError,
    IdentityIndex, PositiveRatioVector, PruneReport, Sample,
};
pub use split::{
    search_split, search_versions, verify_split, CriteriaReport, SplitError, SplitMethod,
    SplitSpec, Thresholds,
};
