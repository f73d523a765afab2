//! Counter-keyed standard normal stream.
//!
//! Step `k` of a path with seed `s` consumes a fixed block of the ChaCha8
//! keystream for `s`, so any step can be regenerated without replaying the
//! ones before it.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
const U53: f64 = 1.0 / (1u64 << 53) as f64;

/// Standard normals for a `d`-dimensional path, keyed by `(seed, step)`.
#[derive(Clone)]
pub struct NormalStream {
    rng: ChaCha8Rng,
    d: usize,
    step: u64,
}

impl NormalStream {
    pub fn new(seed: u64, d: usize) -> Self {
        Self::at(seed, d, 0)
    }

    /// Stream positioned at `step`.
    pub fn at(seed: u64, d: usize, step: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_word_pos(step as u128 * words_per_step(d));
        Self { rng, d, step }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// Fills `out` (length `d`) with the normals of the current step and advances.
    pub fn fill(&mut self, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.d);
        let mut chunks = out.chunks_mut(2);
        for pair in &mut chunks {
            let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * U53;
            let u2 = (self.rng.next_u64() >> 11) as f64 * U53;
            let r = (-2.0 * u1.ln()).sqrt();
            let (s, c) = (TWO_PI * u2).sin_cos();
            pair[0] = r * c;
            if pair.len() > 1 {
                pair[1] = r * s;
            }
        }
        self.step += 1;
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replicate `replicate` at ladder point `point` under `base`.
pub fn derive_seed(base: u64, point: u64, replicate: u64) -> u64 {
    mix(base ^ mix(point.wrapping_mul(0x1_0000_0001) ^ mix(replicate)))
}

/// 32-bit keystream words used per step: two `u64` per pair of normals.
fn words_per_step(d: usize) -> u128 {
    (d.div_ceil(2) * 4) as u128
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_access_matches_sequential() {
        for d in [1, 2, 3, 5] {
            let mut seq = NormalStream::new(42, d);
            let mut buf = vec![0.0; d];
            let mut rows = Vec::new();
            for _ in 0..50 {
                seq.fill(&mut buf);
                rows.push(buf.clone());
            }
            let mut jump = NormalStream::at(42, d, 37);
            jump.fill(&mut buf);
            assert_eq!(buf, rows[37]);
        }
    }

    #[test]
    fn moments_are_standard() {
        let mut s = NormalStream::new(7, 3);
        let mut buf = [0.0; 3];
        let n = 200_000;
        let (mut m1, mut m2, mut m4) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            s.fill(&mut buf);
            for &z in &buf {
                m1 += z;
                m2 += z * z;
                m4 += z.powi(4);
            }
        }
        let k = (3 * n) as f64;
        assert!((m1 / k).abs() < 0.01);
        assert!((m2 / k - 1.0).abs() < 0.01);
        assert!((m4 / k - 3.0).abs() < 0.06);
    }

    #[test]
    fn seeds_give_distinct_streams() {
        let (mut a, mut b) = (NormalStream::new(1, 2), NormalStream::new(2, 2));
        let (mut x, mut y) = ([0.0; 2], [0.0; 2]);
        a.fill(&mut x);
        b.fill(&mut y);
        assert_ne!(x, y);
    }
}
