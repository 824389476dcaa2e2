//! Random-number plumbing: per-chain generators, open-interval uniforms and a
//! scripted generator for replaying fixed variate sequences in tests.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator used for every chain.
pub type ChainRng = ChaCha8Rng;

/// Generator for chain `index` derived from a base seed.
pub fn chain_rng(seed: u64, index: u64) -> ChainRng {
    ChainRng::seed_from_u64(seed.wrapping_add(index))
}

/// Uniform draw on the open interval (0, 1).
#[inline]
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Uniform draw on the open interval (lo, hi).
#[inline]
pub fn open_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * open_unit(rng)
}

/// Replays a fixed list of uniforms through the `RngCore` interface.
///
/// Each value `u` in `[0, 1)` comes back from `rng.random::<f64>()` rounded
/// to the nearest multiple of 2^-53. Panics when the script runs out.
#[derive(Debug, Clone)]
pub struct ScriptedUniforms {
    values: Vec<f64>,
    pos: usize,
}

impl ScriptedUniforms {
    pub fn new(values: &[f64]) -> Self {
        ScriptedUniforms { values: values.to_vec(), pos: 0 }
    }

    pub fn consumed(&self) -> usize {
        self.pos
    }
}

impl RngCore for ScriptedUniforms {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        let u = *self
            .values
            .get(self.pos)
            .unwrap_or_else(|| panic!("scripted uniforms exhausted after {} draws", self.pos));
        self.pos += 1;
        let bits = (u * (1u64 << 53) as f64).round() as u64;
        bits.min((1u64 << 53) - 1) << 11
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let v = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&v[..chunk.len()]);
        }
    }
}
