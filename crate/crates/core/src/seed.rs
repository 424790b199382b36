//! Named seed derivation: every random stream hangs off one root seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derives a child seed from `root` and a label such as `"fidelity/d_year"`.
pub fn derive_seed(root: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_rng(root: u64, label: &str) -> ChaCha8Rng {
    rng(derive_seed(root, label))
}

/// A uniformly random subset of `0..n` of size `k` (sorted), or all indices when `k >= n`.
pub fn subsample_indices(n: usize, k: usize, seed: u64) -> alloc::vec::Vec<usize> {
    use rand::seq::index::sample;
    if k >= n {
        return (0..n).collect();
    }
    let mut idx = sample(&mut rng(seed), n, k).into_vec();
    idx.sort_unstable();
    idx
}
