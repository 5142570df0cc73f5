//! Seedable random streams.
//!
//! Every run owns one master [`SeededRng`]. Subsystems never share a stream:
//! they derive children by label (`"init"`, `"noise"`, `"mc-draw"`, ...),
//! and a child depends only on the parent's seed and the label, never on how
//! many draws the parent has already produced. Draw order inside one
//! subsystem therefore cannot perturb another.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream keyed by `label`.
    pub fn child(&self, label: &str) -> SeededRng {
        SeededRng::new(splitmix64(splitmix64(self.seed) ^ fnv1a(label.as_bytes())))
    }

    /// Independent stream keyed by `label` and a counter (epoch, draw number, cell index).
    pub fn child_indexed(&self, label: &str, index: u64) -> SeededRng {
        let base = splitmix64(splitmix64(self.seed) ^ fnv1a(label.as_bytes()));
        SeededRng::new(splitmix64(base ^ splitmix64(index.wrapping_add(1))))
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}
