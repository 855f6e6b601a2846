//! Deterministic, splittable random streams.
//!
//! Every random decision in the simulator is drawn from a [`RandomStream`]
//! identified by `(seed, stream)`. Children are derived by label, so a trial,
//! a party or a single qubit pair can own an independent stream whose output
//! does not depend on how many numbers its siblings consumed.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer, used to turn `(seed, stream, label)` into a child seed.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a label.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    mix64(seed ^ mix64(label.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// A counter-based random stream (ChaCha8) keyed by `(seed, stream)`.
#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// An independent stream for `label`. Does not advance `self`.
    pub fn child(&self, label: u64) -> RandomStream {
        RandomStream::with_stream(derive_seed(self.seed, self.stream), label)
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    pub fn bit(&mut self) -> bool {
        self.rng.gen::<bool>()
    }

    /// `true` with probability `p` (clamped to `[0, 1]`).
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p.clamp(0.0, 1.0)
    }

    /// Uniform index in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream_is_reproducible() {
        let mut a = RandomStream::with_stream(7, 3);
        let mut b = RandomStream::with_stream(7, 3);
        let xs: Vec<u64> = (0..16).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..16).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn children_do_not_depend_on_parent_consumption() {
        let parent = RandomStream::new(11);
        let mut used = parent.clone();
        for _ in 0..100 {
            used.next_u64();
        }
        assert_eq!(parent.child(5).next_u64(), used.child(5).next_u64());
        assert_ne!(parent.child(5).next_u64(), parent.child(6).next_u64());
    }

    #[test]
    fn uniform_is_in_unit_interval() {
        let mut r = RandomStream::new(1);
        for _ in 0..10_000 {
            let u = r.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }
}
