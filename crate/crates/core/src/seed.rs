//! Deterministic seed derivation.
//!
//! Every randomized operation in this crate consumes an explicit `u64` seed.
//! Sub-tasks (search trials, dataset versions, per-identity generation) get
//! independent ChaCha streams keyed by `(seed, index)`, so results are
//! reproducible regardless of execution order or worker count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// RNG for the `index`-th independent sub-task of a seeded operation.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derive a child seed from `(base_seed, index)`.
///
/// Used where a sub-task needs a full seed of its own (e.g. one split search
/// per dataset version) rather than a stream of a shared seed.
pub fn derive_seed(base_seed: u64, index: u64) -> u64 {
    stream_rng(base_seed, index).next_u64()
}
