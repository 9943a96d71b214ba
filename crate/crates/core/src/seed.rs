//! Deterministic seed fan-out.
//!
//! Every random draw in a run derives from one root seed. Sub-seeds are keyed
//! by a path of integers (sweep point, level, cycle, ...) so that results do
//! not depend on the order in which independent pieces of work execute.

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `root` and a key path.
pub fn derive(root: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(root), |acc, &k| mix(acc ^ mix(k)))
}

/// A sequential stream of seeds, one per stochastic evaluation.
#[derive(Clone, Debug)]
pub struct SeedStream {
    base: u64,
    counter: u64,
}

impl SeedStream {
    pub fn new(base: u64) -> Self {
        Self { base, counter: 0 }
    }

    pub fn next_seed(&mut self) -> u64 {
        self.counter += 1;
        derive(self.base, &[self.counter])
    }

    /// Number of seeds handed out so far.
    pub fn drawn(&self) -> u64 {
        self.counter
    }
}
