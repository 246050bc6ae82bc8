//! Normal moments `c_k = E H_k(X)` and the exponential (Hermite) series
//! `p = φ Σ c_k H_k / k!`.

use serde::Serialize;

use crate::density::GridDensity;
use crate::divergence::std_normal_pdf;
use crate::hermite::hermite_eval_into;

/// Default series truncation order.
pub const DEFAULT_ORDER: usize = 60;

/// `c_0..=c_K`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormalMomentVector {
    c: Vec<f64>,
}

impl NormalMomentVector {
    pub fn new(c: Vec<f64>) -> Self {
        assert!(!c.is_empty(), "normal moment vector needs c_0");
        Self { c }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn get(&self, k: usize) -> f64 {
        self.c.get(k).copied().unwrap_or(0.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.c
    }

    /// `c_0 = 1`, `c_1 = c_2 = 0` within `1e-8`.
    pub fn is_standardized(&self) -> bool {
        (self.get(0) - 1.0).abs() <= 1e-8 && self.get(1).abs() <= 1e-8 && self.get(2).abs() <= 1e-8
    }

    /// Geometric-tail guess for the terms past `K`: `K · c_K² / K!`.
    pub fn remainder_estimate(&self) -> f64 {
        let k = self.order();
        if k == 0 {
            return 0.0;
        }
        k as f64 * term(self.get(k), k)
    }
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|v| (v as f64).ln()).sum()
}

/// `c² / k!` without overflowing the factorial.
fn term(c: f64, k: usize) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    (2.0 * c.abs().ln() - ln_factorial(k)).exp()
}

/// `c_k = Σ w_m H_k(x_m) p_m` for `k ≤ K`.
pub fn normal_moments(d: &GridDensity, k: usize) -> NormalMomentVector {
    let mut c = vec![0.0; k + 1];
    let mut h = vec![0.0; k + 1];
    let spec = d.spec();
    for m in 0..spec.points() {
        let (p, w) = (d.values()[m], d.weights()[m]);
        if p == 0.0 || w == 0.0 {
            continue;
        }
        hermite_eval_into(spec.node(m), &mut h);
        for (ck, hk) in c.iter_mut().zip(&h) {
            *ck += w * p * hk;
        }
    }
    NormalMomentVector { c }
}

/// `Σ_{k=1}^{K} c_k² / k!`.
pub fn chi2_parseval(c: &NormalMomentVector) -> f64 {
    chi2_smoothed(c, 1.0)
}

/// Partial sums `Σ_{k=1}^{j} c_k²/k!` for `j = 0..=K`.
pub fn chi2_partial_sums(c: &NormalMomentVector) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = vec![0.0];
    for k in 1..=c.order() {
        acc += term(c.get(k), k);
        out.push(acc);
    }
    out
}

/// `Σ_{k≥1} t^k c_k² / k!`, the χ² of `√t X + √(1−t) Z`.
pub fn chi2_smoothed(c: &NormalMomentVector, t: f64) -> f64 {
    assert!((0.0..=1.0).contains(&t), "smoothing parameter {t} outside [0, 1]");
    (1..=c.order()).map(|k| t.powi(k as i32) * term(c.get(k), k)).sum()
}

/// Partial sum `φ(x) Σ_{k≤K} c_k H_k(x) / k!`.
pub fn series_reconstruct(c: &NormalMomentVector, x: f64) -> f64 {
    let mut h = vec![0.0; c.order() + 1];
    hermite_eval_into(x, &mut h);
    let mut fact = 1.0;
    let mut acc = 0.0;
    for (k, (ck, hk)) in c.as_slice().iter().zip(&h).enumerate() {
        if k > 0 {
            fact *= k as f64;
        }
        acc += ck * hk / fact;
    }
    std_normal_pdf(x) * acc
}
