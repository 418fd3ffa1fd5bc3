//! Counter-based random streams.
//!
//! Every random draw in a run is addressed by `(seed, purpose, counter, index)`:
//! the seed and purpose select a ChaCha8 key, the counter (usually the
//! iteration number) selects the ChaCha nonce, and the index (usually the
//! particle) selects a fixed-size window of the keystream. A particle's draws
//! therefore never depend on how the ensemble is split across worker threads.
//!
//! Normals come from the Box-Muller transform, which consumes exactly two
//! 64-bit words per pair of outputs. Fixed consumption is what makes the
//! window per index well defined.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Distinct purposes never share a key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Init = 0x494e_4954,
    Noise = 0x4e4f_4953,
    Batch = 0x4241_5443,
    Generator = 0x4745_4e52,
}

/// Build the generator for `(seed, purpose, counter)`, positioned at the start
/// of the counter's keystream.
pub fn stream(seed: u64, purpose: Purpose, counter: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(counter);
    rng
}

/// A keystream reader that hands out fixed-width blocks of draws per index.
pub struct IndexedStream {
    rng: ChaCha8Rng,
    words_per_index: u128,
}

impl IndexedStream {
    /// `draws_per_index` is the number of `f64` values produced per index.
    /// Normals and uniforms share the same layout: two 64-bit words per pair.
    pub fn new(seed: u64, purpose: Purpose, counter: u64, draws_per_index: usize) -> Self {
        let pairs = draws_per_index.div_ceil(2) as u128;
        Self {
            rng: stream(seed, purpose, counter),
            // two u64 per pair, two 32-bit ChaCha words per u64
            words_per_index: pairs * 4,
        }
    }

    /// Jump to the window belonging to `index`.
    pub fn seek(&mut self, index: u64) {
        self.rng.set_word_pos(index as u128 * self.words_per_index);
    }

    /// Fill `out` with standard normals. `out.len()` must equal the
    /// `draws_per_index` given at construction for the layout to hold.
    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for pair in out.chunks_mut(2) {
            let (a, b) = box_muller(self.rng.next_u64(), self.rng.next_u64());
            pair[0] = a;
            if let Some(second) = pair.get_mut(1) {
                *second = b;
            }
        }
    }

    /// Fill `out` with uniforms on `[0, 1)`, using the same word layout as
    /// [`IndexedStream::fill_normal`].
    pub fn fill_uniform(&mut self, out: &mut [f64]) {
        for pair in out.chunks_mut(2) {
            let (a, b) = (self.rng.next_u64(), self.rng.next_u64());
            pair[0] = unit_open_high(a);
            if let Some(second) = pair.get_mut(1) {
                *second = unit_open_high(b);
            }
        }
    }
}

/// Standard normal from any generator, one Box-Muller pair per call
/// (the second value is discarded).
pub fn standard_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    box_muller(rng.next_u64(), rng.next_u64()).0
}

/// Uniform on `[low, high)`.
pub fn uniform<R: RngCore + ?Sized>(rng: &mut R, low: f64, high: f64) -> f64 {
    low + (high - low) * unit_open_high(rng.next_u64())
}

#[inline]
fn unit_open_high(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn unit_open_low(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn box_muller(a: u64, b: u64) -> (f64, f64) {
    let radius = (-2.0 * unit_open_low(a).ln()).sqrt();
    let angle = std::f64::consts::TAU * unit_open_high(b);
    let (s, c) = angle.sin_cos();
    (radius * c, radius * s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_do_not_depend_on_read_order() {
        let d = 3;
        let mut sequential = IndexedStream::new(7, Purpose::Noise, 11, d);
        sequential.seek(0);
        let mut all = vec![0.0; 5 * d];
        for chunk in all.chunks_mut(d) {
            sequential.fill_normal(chunk);
        }

        let mut random_access = IndexedStream::new(7, Purpose::Noise, 11, d);
        for i in [4u64, 1, 3, 0, 2] {
            let mut buf = vec![0.0; d];
            random_access.seek(i);
            random_access.fill_normal(&mut buf);
            assert_eq!(&buf[..], &all[i as usize * d..(i as usize + 1) * d]);
        }
    }

    #[test]
    fn purposes_and_counters_give_distinct_streams() {
        let draw = |p, c| {
            let mut s = IndexedStream::new(1, p, c, 2);
            let mut out = [0.0; 2];
            s.fill_normal(&mut out);
            out
        };
        assert_ne!(draw(Purpose::Noise, 1), draw(Purpose::Noise, 2));
        assert_ne!(draw(Purpose::Noise, 1), draw(Purpose::Init, 1));
    }

    #[test]
    fn normal_moments() {
        let n = 200_000;
        let mut s = IndexedStream::new(3, Purpose::Noise, 0, n);
        let mut out = vec![0.0; n];
        s.fill_normal(&mut out);
        let mean = out.iter().sum::<f64>() / n as f64;
        let var = out.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        // standard errors: 1/sqrt(n) ≈ 0.0022 for the mean, sqrt(2/n) ≈ 0.0032 for the variance
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.015, "var {var}");
    }

    #[test]
    fn uniforms_stay_in_range() {
        let mut s = IndexedStream::new(5, Purpose::Init, 0, 10_000);
        let mut out = vec![0.0; 10_000];
        s.fill_uniform(&mut out);
        assert!(out.iter().all(|u| (0.0..1.0).contains(u)));
        let mean = out.iter().sum::<f64>() / out.len() as f64;
        assert!((mean - 0.5).abs() < 0.02);
    }
}
