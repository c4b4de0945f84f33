//! Seed derivation for independent, reproducible random sub-streams.
//!
//! Every stochastic component draws from its own ChaCha8 stream keyed by
//! `(master seed, component label, id)`. Adding a new component therefore
//! never shifts the draws of an existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// The pinned generator used throughout the simulator.
pub type SimRng = ChaCha8Rng;

/// Derives a 32-byte key from `(master, label, id)`.
fn derive_key(master: u64, label: &str, id: u64) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.update(id.to_le_bytes());
    hasher.finalize().into()
}

/// Returns the generator for component `label`, instance `id`.
pub fn substream(master: u64, label: &str, id: u64) -> SimRng {
    SimRng::from_seed(derive_key(master, label, id))
}

/// Derives a child 64-bit seed, e.g. a per-repetition master seed.
pub fn child_seed(master: u64, label: &str, id: u64) -> u64 {
    let key = derive_key(master, label, id);
    u64::from_le_bytes(key[..8].try_into().expect("8 bytes"))
}
