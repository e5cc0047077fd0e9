//! Seed derivation for reproducible per-image noise.
//!
//! Every random stream is a ChaCha8 keystream keyed by
//! `SHA-256("dvd-noise-v1" ‖ seed ‖ image_id ‖ stream)`, so streams for
//! different images or degradation kinds are independent while remaining
//! reproducible from the run seed alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

const DOMAIN: &[u8] = b"dvd-noise-v1";

pub fn derive_key(seed: u64, image_id: &str, stream: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(DOMAIN);
    h.update(seed.to_le_bytes());
    h.update((image_id.len() as u64).to_le_bytes());
    h.update(image_id.as_bytes());
    h.update((stream.len() as u64).to_le_bytes());
    h.update(stream.as_bytes());
    h.finalize().into()
}

pub fn stream_rng(seed: u64, image_id: &str, stream: &str) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(derive_key(seed, image_id, stream))
}

#[inline]
pub(crate) fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.random::<f64>()
}

#[inline]
pub(crate) fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}
