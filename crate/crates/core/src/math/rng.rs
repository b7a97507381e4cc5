//! Seeded, platform-independent random streams.
//!
//! Every stream is a ChaCha8 generator keyed by a 64-bit seed plus a 64-bit
//! stream id, so data-parallel code can give each example its own substream
//! and still produce output that does not depend on scheduling.

use std::f64::consts::PI;

use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    /// Independent substream for `(tag, index)`, e.g. one per split and example.
    pub fn substream(&self, tag: u16, index: u64) -> Rng {
        assert!(index < 1 << 48, "substream index out of range");
        let stream = ((tag as u64) << 48) | index;
        Rng::with_stream(self.seed ^ self.stream.rotate_left(17), stream)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn gaussian(&mut self, mean: f64, std: f64) -> f64 {
        let z: f64 = self.inner.sample(StandardNormal);
        mean + std * z
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// von Mises sample with mean 0 and concentration `kappa`, in `[-π, π]`.
    ///
    /// Best–Fisher rejection sampler; `kappa == 0` is the uniform circle.
    pub fn von_mises(&mut self, kappa: f64) -> Result<f64> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "von Mises concentration must be finite and >= 0, got {kappa}"
            )));
        }
        if kappa < 1e-8 {
            return Ok(self.uniform(-PI, PI));
        }
        let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
        let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
        let r = (1.0 + rho * rho) / (2.0 * rho);
        loop {
            let u1 = self.unit();
            let u2 = self.unit();
            let z = (PI * u1).cos();
            let f = (1.0 + r * z) / (r + z);
            let c = kappa * (r - f);
            let accept = c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0;
            if accept {
                let theta = f.clamp(-1.0, 1.0).acos();
                return Ok(if self.unit() < 0.5 { -theta } else { theta });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_seeds_give_identical_streams() {
        let mut a = Rng::new(7);
        let mut b = Rng::new(7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut c = Rng::new(8);
        assert_ne!(Rng::new(7).next_u64(), c.next_u64());
    }

    #[test]
    fn substreams_are_distinct_and_reproducible() {
        let base = Rng::new(3);
        let mut s1 = base.substream(1, 5);
        let mut s2 = base.substream(1, 6);
        let mut s1b = Rng::new(3).substream(1, 5);
        let x = s1.next_u64();
        assert_eq!(x, s1b.next_u64());
        assert_ne!(x, s2.next_u64());
    }

    #[test]
    fn negative_concentration_rejected() {
        let mut rng = Rng::new(0);
        assert!(rng.von_mises(-0.1).is_err());
        assert!(rng.von_mises(f64::NAN).is_err());
    }

    #[test]
    fn uniform_mean_within_three_sigma() {
        let mut rng = Rng::new(11);
        let n = 100_000;
        let mean = (0..n).map(|_| rng.uniform(-3.0, 3.0)).sum::<f64>() / n as f64;
        // std of U(-3,3) is sqrt(3)
        let sigma = 3f64.sqrt() / (n as f64).sqrt();
        assert!(mean.abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn von_mises_zero_concentration_is_uniform() {
        let mut rng = Rng::new(21);
        let n = 100_000;
        let bins = 20;
        let mut counts = vec![0usize; bins];
        for _ in 0..n {
            let t = rng.von_mises(0.0).unwrap();
            assert!((-PI..=PI).contains(&t));
            let b = (((t + PI) / (2.0 * PI)) * bins as f64) as usize;
            counts[b.min(bins - 1)] += 1;
        }
        let expected = n as f64 / bins as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // chi-square critical value, 19 dof, p = 0.01
        assert!(chi2 < 36.19, "chi2 {chi2}");
    }

    /// Modified Bessel function of the first kind, by power series.
    fn bessel_i(order: u32, x: f64) -> f64 {
        let mut term = (x / 2.0).powi(order as i32) / (1..=order).map(f64::from).product::<f64>();
        let mut sum = term;
        for m in 1..200 {
            term *= (x / 2.0).powi(2) / (m as f64 * (m + order) as f64);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        sum
    }

    #[test]
    fn von_mises_resultant_length_matches_bessel_ratio() {
        let expected = bessel_i(1, 1.0) / bessel_i(0, 1.0);
        assert!((expected - 0.4464).abs() < 1e-4);
        let mut rng = Rng::new(5);
        let n = 100_000;
        let (mut c, mut s) = (0.0, 0.0);
        for _ in 0..n {
            let t = rng.von_mises(1.0).unwrap();
            c += t.cos();
            s += t.sin();
        }
        let r = (c * c + s * s).sqrt() / n as f64;
        assert!((r - expected).abs() < 0.02, "R {r} vs {expected}");
    }

    #[test]
    fn von_mises_is_reproducible() {
        let a: Vec<f64> = {
            let mut r = Rng::new(99);
            (0..50).map(|_| r.von_mises(4.0).unwrap()).collect()
        };
        let b: Vec<f64> = {
            let mut r = Rng::new(99);
            (0..50).map(|_| r.von_mises(4.0).unwrap()).collect()
        };
        assert_eq!(a, b);
    }
}
