//! Densities of weighted sums by characteristic-function powering and FFT
//! inversion.
//!
//! A plain inverse DFT only resolves the density down to about `1e-16` of its
//! peak, which is useless for `p/φ` in the tails. Each node is therefore
//! recovered from an exponentially tilted law `p(x) e^{θx}/M(θ)` whose mean
//! sits near that node, so every value comes with relative accuracy.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use super::{materialize, trapezoid_weights, Family, GridDensity, GridSpec};
use crate::{Error, Result};

/// Largest spectral energy fraction allowed past the frequency window.
pub const ALIAS_TOL: f64 = 1e-10;

/// Mass budget of an inverted density. Laws with jumps invert with slowly
/// decaying ringing, and piecing tilts together does not conserve it exactly.
pub const SUM_MASS_TOL: f64 = 1e-6;

/// `count` independent copies of `scale · X` with `X ~ family`.
#[derive(Clone, Copy, Debug)]
pub struct SumTerm<'a> {
    pub family: &'a Family,
    pub scale: f64,
    pub count: usize,
}

/// Density of `Z_n` on `spec`; `n = 1` materializes directly.
pub fn zn_density(f: &Family, n: usize, spec: &GridSpec) -> Result<GridDensity> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if n == 1 {
        return materialize(f, spec);
    }
    sum_density(&[SumTerm { family: f, scale: 1.0 / (n as f64).sqrt(), count: n }], spec)
}

struct Sum<'a> {
    terms: &'a [SumTerm<'a>],
}

impl Sum<'_> {
    /// `log E e^{i z S}`.
    fn log_cf(&self, z: Complex64) -> Complex64 {
        self.terms
            .iter()
            .map(|t| t.family.log_cf(z * t.scale) * t.count as f64)
            .sum()
    }

    /// `log E e^{θS}`.
    fn log_mgf(&self, theta: f64) -> f64 {
        self.log_cf(Complex64::new(0.0, -theta)).re
    }

    fn mgf_slope(&self, theta: f64) -> f64 {
        let eps = 1e-5 * theta.abs().max(1.0);
        (self.log_mgf(theta + eps) - self.log_mgf(theta - eps)) / (2.0 * eps)
    }
}

/// Density of `Σ_terms Σ_{count} scale·X` on `spec`.
pub fn sum_density(terms: &[SumTerm], spec: &GridSpec) -> Result<GridDensity> {
    if terms.is_empty() {
        return Err(Error::InvalidParameter("empty sum".into()));
    }
    for t in terms {
        if !(t.scale.is_finite() && t.scale > 0.0) || t.count == 0 {
            return Err(Error::InvalidParameter(format!(
                "sum term needs positive scale and count (got {} x {})",
                t.count, t.scale
            )));
        }
    }
    if terms.iter().any(|t| matches!(t.family, Family::CustomGrid(_))) {
        return untilted(terms, spec);
    }
    let sum = Sum { terms };
    let n = spec.points();
    let l = spec.half_width();
    let dt = 2.0 * PI / (n as f64 * spec.spacing());
    check_aliasing(&sum, spec, dt)?;

    let tilts = tilt_grid(&sum, l);
    let slopes: Vec<f64> = tilts.iter().map(|&th| sum.mgf_slope(th)).collect();
    // node m is served by the tilt whose mean lies closest to x_m
    let mut owner = vec![0usize; n];
    for (m, o) in owner.iter_mut().enumerate() {
        let x = spec.node(m);
        let k = slopes.partition_point(|&s| s < x);
        *o = if k == 0 {
            0
        } else if k == slopes.len() || (x - slopes[k - 1]) <= (slopes[k] - x) {
            k - 1
        } else {
            k
        };
    }
    let mut ranges: Vec<(usize, usize, usize)> = Vec::new(); // (tilt, start, end)
    for (m, &o) in owner.iter().enumerate() {
        match ranges.last_mut() {
            Some(r) if r.0 == o => r.2 = m + 1,
            _ => ranges.push((o, m, m + 1)),
        }
    }

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let pieces: Vec<Vec<f64>> = ranges
        .par_iter()
        .map(|&(k, start, end)| {
            let theta = tilts[k];
            let k0 = sum.log_mgf(theta);
            let mut buf: Vec<Complex64> = (0..n)
                .map(|j| {
                    let jj = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
                    let t = jj * dt;
                    let lc = sum.log_cf(Complex64::new(t, -theta)) - k0;
                    if !lc.re.is_finite() || lc.re < -745.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        (lc + Complex64::new(0.0, t * l)).exp()
                    }
                })
                .collect();
            fft.process(&mut buf);
            (start..end)
                .map(|m| {
                    let tilted = buf[m].re * dt / (2.0 * PI);
                    if tilted <= 0.0 {
                        0.0
                    } else {
                        (tilted.ln() + k0 - theta * spec.node(m)).exp()
                    }
                })
                .collect()
        })
        .collect();
    let values: Vec<f64> = pieces.into_iter().flatten().collect();
    finish(*spec, values, 0.0)
}

fn finish(spec: GridSpec, values: Vec<f64>, noise_floor: f64) -> Result<GridDensity> {
    let d = GridDensity::with_weights(spec, values, trapezoid_weights(&spec), noise_floor)?;
    let mass = d.mass();
    if (mass - 1.0).abs() > SUM_MASS_TOL {
        return Err(Error::TailMass { mass: (1.0 - mass).abs(), budget: SUM_MASS_TOL });
    }
    Ok(d)
}

/// Tilts `θ = 0, ±1, ±2, …` until the tilted mean leaves the grid or stops moving.
fn tilt_grid(sum: &Sum, l: f64) -> Vec<f64> {
    let cap = 4.0 * l + 16.0;
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (side, out) in [(1.0, &mut pos), (-1.0, &mut neg)] {
        let mut theta: f64 = 1.0;
        while theta <= cap {
            let s = sum.mgf_slope(side * theta);
            out.push(side * theta);
            if s.abs() > l + 1.0 || !s.is_finite() {
                break;
            }
            theta += 1.0;
        }
    }
    neg.reverse();
    neg.push(0.0);
    neg.extend(pos);
    neg
}

fn check_aliasing(sum: &Sum, spec: &GridSpec, dt: f64) -> Result<()> {
    let n = spec.points();
    let t_max = PI / spec.spacing();
    let energy = |t: f64| {
        let lc = sum.log_cf(Complex64::new(t, 0.0));
        if lc.re.is_finite() { (2.0 * lc.re).exp() } else { 0.0 }
    };
    let inside: f64 = (0..n / 2).map(|j| energy(j as f64 * dt) * if j == 0 { 0.5 } else { 1.0 }).sum::<f64>() * dt;
    // ∫_{t_max}^{64 t_max} |Φ|² in log t
    let steps = 512;
    let (a, b) = (t_max.ln(), (64.0 * t_max).ln());
    let du = (b - a) / steps as f64;
    let outside: f64 = (0..=steps)
        .map(|k| {
            let t = (a + k as f64 * du).exp();
            let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
            w * energy(t) * t
        })
        .sum::<f64>()
        * du;
    let fraction = outside / (inside + outside);
    if fraction > ALIAS_TOL {
        return Err(Error::Aliasing { fraction });
    }
    Ok(())
}

/// Frequency-domain product with direct sums for sampled factors; no tilting.
fn untilted(terms: &[SumTerm], spec: &GridSpec) -> Result<GridDensity> {
    let n = spec.points();
    let l = spec.half_width();
    let dt = 2.0 * PI / (n as f64 * spec.spacing());
    let mut buf: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|j| {
            let jj = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
            let t = jj * dt;
            let mut lc = Complex64::new(0.0, 0.0);
            for term in terms {
                let s = t * term.scale;
                if let Family::CustomGrid(d) = term.family {
                    // the sampled transform is periodic past its own Nyquist frequency
                    if s.abs() > PI / d.spec().spacing() {
                        return Complex64::new(0.0, 0.0);
                    }
                }
                lc += term.family.log_cf(Complex64::new(s, 0.0)) * term.count as f64;
            }
            if !lc.re.is_finite() || lc.re < -745.0 {
                Complex64::new(0.0, 0.0)
            } else {
                (lc + Complex64::new(0.0, t * l)).exp()
            }
        })
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let raw: Vec<f64> = buf.iter().map(|v| v.re * dt / (2.0 * PI)).collect();
    let max = raw.iter().copied().fold(0.0, f64::max);
    let floor = terms
        .iter()
        .filter_map(|t| match t.family {
            Family::CustomGrid(d) => Some(d.noise_floor()),
            _ => None,
        })
        .fold(1e-15 * max, f64::max);
    finish(*spec, raw.into_iter().map(|v| v.max(0.0)).collect(), floor)
}
