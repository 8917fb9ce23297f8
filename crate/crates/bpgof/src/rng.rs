//! Deterministic substreams and discrete variate generation.
//!
//! Every consumer of randomness in this crate receives its own stream derived
//! from `(master seed, purpose tag, indices)` via SHA-256, so results are
//! reproducible bit-for-bit regardless of execution order or worker count.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

/// Derive an independent ChaCha12 stream keyed by `(seed, tag, indices)`.
///
/// Distinct `(tag, indices)` combinations yield statistically independent
/// streams for the same master seed.
pub fn substream(seed: u64, tag: &str, indices: &[u64]) -> ChaCha12Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((tag.len() as u64).to_le_bytes());
    h.update(tag.as_bytes());
    for &i in indices {
        h.update(i.to_le_bytes());
    }
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha12Rng::from_seed(key)
}

/// Draw one Poisson(mean) variate.
///
/// Sequential inversion of the cdf for small means, Hörmann's transformed
/// rejection (PTRS) otherwise. The switch point keeps inversion exact where
/// the simulation study lives (means around 1) and rejection fast for the
/// large-θ tables (means near 10).
pub fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u32 {
    assert!(mean > 0.0 && mean.is_finite(), "poisson mean must be positive");
    if mean < 10.0 {
        poisson_inversion(rng, mean)
    } else {
        poisson_ptrs(rng, mean)
    }
}

fn poisson_inversion<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u32 {
    let u: f64 = rng.random();
    let mut p = (-mean).exp();
    let mut cdf = p;
    let mut x = 0u32;
    // Tail beyond mean + 40*sqrt(mean) is far below 2^-53; the cap only
    // guards against u rounding to 1.
    let cap = (mean + 40.0 * mean.sqrt() + 50.0) as u32;
    while u > cdf && x < cap {
        x += 1;
        p *= mean / x as f64;
        cdf += p;
    }
    x
}

/// Hörmann (1993) PTRS transformed-rejection sampler, valid for mean >= 10.
fn poisson_ptrs<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u32 {
    let slam = mean.sqrt();
    let loglam = mean.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u: f64 = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u32;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = k * loglam - mean - statrs::function::gamma::ln_gamma(k + 1.0);
        if lhs <= rhs {
            return k as u32;
        }
    }
}
