#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use renyi_clt::density::{materialize, Family, GridDensity, GridSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A standardized exponential-series law `φ (1 + Σ_{k≥2} σ_k H_{2k}/(2^k k!))`
/// with random coefficients, resampled until the density is nonnegative.
pub fn random_exp_series(rng: &mut ChaCha8Rng, spec: &GridSpec) -> (Family, GridDensity) {
    loop {
        let terms = rng.gen_range(1..=3);
        let mut sigmas = vec![1.0, 0.0];
        for k in 0..terms {
            let scale = [0.6, 0.25, 0.08][k];
            sigmas.push(rng.gen_range(-scale..scale));
        }
        let f = Family::exp_series(sigmas).unwrap();
        if let Ok(d) = materialize(&f, spec) {
            return (f, d);
        }
    }
}

/// Random standardized mixture with every variance below `vmax`.
pub fn random_mixture(rng: &mut ChaCha8Rng, vmax: f64) -> Family {
    loop {
        let w: f64 = rng.gen_range(0.2..0.8);
        let v1: f64 = rng.gen_range(0.3..1.0);
        // w v1 + (1 − w) v2 = 1
        let v2 = (1.0 - w * v1) / (1.0 - w);
        if v2 < vmax {
            return Family::mixture(&[(v1, w), (v2, 1.0 - w)]).unwrap();
        }
    }
}

pub fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}
