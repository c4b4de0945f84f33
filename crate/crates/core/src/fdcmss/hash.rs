use rand::Rng;

use super::ItemId;
use crate::rng;

/// Mersenne prime 2^61 - 1, larger than the 32-bit item universe.
pub const PRIME: u64 = (1 << 61) - 1;

/// One member of the family `h(x) = ((a x + b) mod P) mod w`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RowHash {
    pub a: u64,
    pub b: u64,
}

impl RowHash {
    #[inline]
    pub fn bucket(&self, item: ItemId, w: usize) -> usize {
        let v = (self.a as u128 * item as u128 + self.b as u128) % PRIME as u128;
        (v % w as u128) as usize
    }
}

/// Derives `d` row hashes from `seed`. Every peer sharing the seed
/// obtains the same functions.
pub fn derive_row_hashes(d: usize, seed: u64) -> Vec<RowHash> {
    let mut rng = rng::substream(seed, "fdcmss.hash", 0);
    (0..d)
        .map(|_| RowHash {
            a: rng.gen_range(1..PRIME),
            b: rng.gen_range(0..PRIME),
        })
        .collect()
}
