//! SplitMix64, the one pseudo-random generator every component draws from.
//!
//! Output for state `s`: `s += 0x9E3779B97F4A7C15; z = s;
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9; z = (z ^ (z >> 27)) * 0x94D049BB133111EB;
//! return z ^ (z >> 31)` (wrapping arithmetic). Bounded draws use the
//! multiply-high reduction `(x * len) >> 64`.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Independent stream for a `(seed, a, b)` triple, e.g. a per-node or
    /// per-link stream.
    pub fn derive(seed: u64, a: u64, b: u64) -> Self {
        let mut mixer = SplitMix64::new(seed);
        let x = mixer.next_u64() ^ a.wrapping_mul(0xD6E8_FEB8_6659_FD93);
        let mut mixer = SplitMix64::new(x);
        let y = mixer.next_u64() ^ b.wrapping_mul(0xA076_1D64_78BD_642F);
        SplitMix64::new(y)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform index in `0..len`; `len` must be non-zero.
    pub fn below(&mut self, len: usize) -> usize {
        ((self.next_u64() as u128 * len as u128) >> 64) as usize
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
