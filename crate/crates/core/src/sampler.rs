//! Deterministic random sampling.
//!
//! All stochastic estimates in the crate (sampled dissipativity margins,
//! axiom sweeps, probe vectors) draw from a [`Sampler`] seeded explicitly.
//! The generator is ChaCha8, so a seed reproduces the identical stream on
//! every platform.  Samplers are cheap to clone; clone one per experiment
//! when several estimates must not share a stream.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Default seed used by callers that do not care about the particular
/// stream, chosen once so that published numbers reproduce.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Standard normal draw via Box-Muller; two uniforms per call keeps the
    /// stream layout independent of any cached spare value.
    pub fn normal(&mut self) -> f64 {
        let u1: f64 = self.rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = self.rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    pub fn real_vector(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.normal()).collect()
    }

    /// Complex Gaussian vector; real and imaginary parts are independent.
    pub fn complex_vector(&mut self, n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|_| Complex64::new(self.normal(), self.normal()))
            .collect()
    }

    /// Complex Gaussian scalar with unit-scale components.
    pub fn complex_scalar(&mut self) -> Complex64 {
        Complex64::new(self.normal(), self.normal())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = Sampler::new(7);
        let mut b = Sampler::new(7);
        for _ in 0..32 {
            assert_eq!(a.normal().to_bits(), b.normal().to_bits());
        }
    }

    #[test]
    fn different_seeds_diverge() {
        let mut a = Sampler::new(1);
        let mut b = Sampler::new(2);
        let va = a.real_vector(8);
        let vb = b.real_vector(8);
        assert_ne!(va, vb);
    }

    #[test]
    fn normal_draws_are_finite_and_spread() {
        let mut s = Sampler::new(3);
        let v = s.real_vector(1000);
        assert!(v.iter().all(|x| x.is_finite()));
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean.abs() < 0.2, "sample mean {mean} too far from zero");
    }
}
