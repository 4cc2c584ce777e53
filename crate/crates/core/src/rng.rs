//! Named, independent random streams derived from one root seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream names used by the simulation layer.
pub mod stream {
    pub const PATH_P: &str = "path-P";
    pub const PATH_Q: &str = "path-Q";
    pub const NOISE_P: &str = "noise-P";
    pub const NOISE_Q: &str = "noise-Q";
    pub const TEST: &str = "test";
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Derives the seed of a named child stream.
pub fn derive(seed: u64, name: &str) -> u64 {
    splitmix64(seed ^ splitmix64(fnv1a(name)))
}

/// Derives the seed of the `index`-th replication under `seed`.
pub fn derive_index(seed: u64, index: u64) -> u64 {
    splitmix64(seed.wrapping_add(splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D))))
}

/// Root of a tree of named streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Streams {
    seed: u64,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn child(&self, name: &str) -> Streams {
        Streams {
            seed: derive(self.seed, name),
        }
    }

    pub fn replication(&self, index: usize) -> Streams {
        Streams {
            seed: derive_index(self.seed, index as u64),
        }
    }

    pub fn seed_of(&self, name: &str) -> u64 {
        derive(self.seed, name)
    }

    pub fn rng(&self, name: &str) -> Rng {
        Rng::seed_from_u64(self.seed_of(name))
    }
}

pub fn rng_from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_streams_differ() {
        let s = Streams::new(7);
        assert_ne!(s.seed_of(stream::PATH_P), s.seed_of(stream::PATH_Q));
        assert_ne!(s.seed_of(stream::NOISE_P), s.seed_of(stream::NOISE_Q));
        assert_eq!(
            s.seed_of(stream::TEST),
            Streams::new(7).seed_of(stream::TEST)
        );
    }

    #[test]
    fn replications_differ() {
        let s = Streams::new(1);
        assert_ne!(s.replication(0).seed(), s.replication(1).seed());
    }
}
