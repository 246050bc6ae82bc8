//! Divergences of a grid density from the standard normal law.
//!
//! Every functional is integrated in a centered form `F(x, p)` that vanishes
//! when `p = φ`, so small divergences do not drown in cancellation. Nodes with
//! corrected support weights (see [`crate::density::quadrature`]) integrate
//! `F(x, p) − F(x, 0)` with those weights and the smooth background
//! `F(x, 0)` with plain trapezoid weights.
//!
//! Convergence is judged on nested windows `|x| ≤ L/4, L/2, L`: if the value
//! moves by more than `1e-4` relative at both steps, the integral is reported
//! as divergent rather than truncated.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::density::{trapezoid_weights, GridDensity, GridSpec};
use crate::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Relative change that counts as "not yet converged" under window doubling.
pub const DOUBLING_TOL: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceKind {
    Renyi,
    Tsallis,
    Chi2,
    PearsonVajda,
    #[serde(rename = "kl")]
    KL,
    #[serde(rename = "tv")]
    TV,
    Hellinger,
}

impl DivergenceKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Renyi => "renyi",
            Self::Tsallis => "tsallis",
            Self::Chi2 => "chi2",
            Self::PearsonVajda => "pearson_vajda",
            Self::KL => "kl",
            Self::TV => "tv",
            Self::Hellinger => "hellinger",
        }
    }

    /// Whether the functional is indexed by `α`.
    pub fn takes_alpha(self) -> bool {
        matches!(self, Self::Renyi | Self::Tsallis | Self::PearsonVajda)
    }

    /// Checks `α` against the functional's domain.
    pub fn validate_alpha(self, alpha: f64) -> Result<()> {
        let ok = match self {
            Self::Renyi | Self::Tsallis => alpha.is_finite() && alpha > 0.0 && alpha != 1.0,
            Self::PearsonVajda => alpha.is_finite() && alpha >= 1.0,
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("alpha = {alpha} is outside the domain of {self}")))
        }
    }
}

impl fmt::Display for DivergenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DivergenceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "renyi" => Self::Renyi,
            "tsallis" => Self::Tsallis,
            "chi2" => Self::Chi2,
            "pearson_vajda" | "pv" => Self::PearsonVajda,
            "kl" => Self::KL,
            "tv" => Self::TV,
            "hellinger" => Self::Hellinger,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown divergence kind '{other}' (expected renyi, tsallis, chi2, pearson_vajda, kl, tv, hellinger)"
                )))
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivergenceValue {
    pub kind: DivergenceKind,
    pub alpha: Option<f64>,
    pub value: f64,
    /// Change of the integral over the outer half of the window.
    pub truncation_error_bound: f64,
}

fn ln_phi(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// Centered integrand `F(p, φ, ln φ)`, evaluated at `p = 0` for the background.
struct Functional<F> {
    label: String,
    f: F,
}

impl<F: Fn(f64, f64, f64) -> f64> Functional<F> {
    fn integrate(&self, d: &GridDensity) -> Result<(f64, f64)> {
        let spec = d.spec();
        let trap = trapezoid_weights(spec);
        let noise = d.noise_floor();
        let l = spec.half_width();
        let windows = [0.25 * l, 0.5 * l, l];
        let mut sums = [0.0; 3];
        for m in 0..spec.points() {
            let x = spec.node(m);
            let lp = ln_phi(x);
            let phi = lp.exp();
            if noise > 0.0 && phi < 1e8 * noise {
                continue;
            }
            let (p, w, t) = (d.values()[m], d.weights()[m], trap[m]);
            let c = if w == t {
                t * (self.f)(p, phi, lp)
            } else {
                let f0 = (self.f)(0.0, phi, lp);
                let fp = if w == 0.0 { f0 } else { (self.f)(p, phi, lp) };
                w * (fp - f0) + t * f0
            };
            for (k, &wd) in windows.iter().enumerate() {
                if x.abs() <= wd * (1.0 + 1e-12) {
                    sums[k] += c;
                }
            }
        }
        let tol = |v: f64| DOUBLING_TOL * v.abs() + 1e-14;
        let (d1, d2) = ((sums[1] - sums[0]).abs(), (sums[2] - sums[1]).abs());
        if sums.iter().any(|v| !v.is_finite()) || (d1 > tol(sums[1]) && d2 > tol(sums[2])) {
            return Err(Error::Diverged { what: self.label.clone(), values: sums.to_vec() });
        }
        Ok((sums[2], d2))
    }
}

fn functional<F: Fn(f64, f64, f64) -> f64>(label: impl Into<String>, f: F) -> Functional<F> {
    Functional { label: label.into(), f }
}

/// `∫ (p^α φ^{1−α} − φ)`, i.e. `∫ (p/φ)^α φ − 1`.
fn power_excess(d: &GridDensity, alpha: f64) -> Result<(f64, f64)> {
    functional(format!("power integral at alpha = {alpha}"), |p, phi, lp| {
        if p <= 0.0 {
            return -phi;
        }
        let e = alpha * (p.ln() - lp);
        if phi > 1e-300 {
            phi * e.exp_m1()
        } else {
            (e + lp).exp() - phi
        }
    })
    .integrate(d)
}

pub fn tsallis(d: &GridDensity, alpha: f64) -> Result<DivergenceValue> {
    DivergenceKind::Tsallis.validate_alpha(alpha)?;
    let (a1, bound) = power_excess(d, alpha)?;
    Ok(DivergenceValue {
        kind: DivergenceKind::Tsallis,
        alpha: Some(alpha),
        value: (a1 / (alpha - 1.0)).max(0.0),
        truncation_error_bound: bound / (alpha - 1.0).abs(),
    })
}

pub fn renyi(d: &GridDensity, alpha: f64) -> Result<DivergenceValue> {
    DivergenceKind::Renyi.validate_alpha(alpha)?;
    let (a1, bound) = power_excess(d, alpha)?;
    let value = a1.ln_1p() / (alpha - 1.0);
    Ok(DivergenceValue {
        kind: DivergenceKind::Renyi,
        alpha: Some(alpha),
        value: value.max(0.0),
        truncation_error_bound: bound / ((1.0 + a1) * (alpha - 1.0).abs()),
    })
}

fn simple(kind: DivergenceKind, alpha: Option<f64>, r: (f64, f64)) -> DivergenceValue {
    DivergenceValue { kind, alpha, value: r.0.max(0.0), truncation_error_bound: r.1 }
}

/// `∫ (p − φ)²/φ`.
pub fn chi2(d: &GridDensity) -> Result<DivergenceValue> {
    let r = functional("chi-squared", |p, _phi, lp| {
        let diff = (p - lp.exp()).abs();
        if diff == 0.0 { 0.0 } else { (2.0 * diff.ln() - lp).exp() }
    })
    .integrate(d)?;
    Ok(simple(DivergenceKind::Chi2, None, r))
}

/// `∫ |p − φ|^α φ^{1−α}`; at `α = 1` this is the total variation.
pub fn pearson_vajda(d: &GridDensity, alpha: f64) -> Result<DivergenceValue> {
    DivergenceKind::PearsonVajda.validate_alpha(alpha)?;
    let r = functional(format!("Pearson-Vajda at alpha = {alpha}"), |p, phi, lp| {
        let diff = (p - phi).abs();
        if diff == 0.0 { 0.0 } else { (alpha * diff.ln() + (1.0 - alpha) * lp).exp() }
    })
    .integrate(d)?;
    Ok(simple(DivergenceKind::PearsonVajda, Some(alpha), r))
}

/// `∫ p log(p/φ)`, integrated as `∫ (p log(p/φ) − p + φ)`.
pub fn kl(d: &GridDensity) -> Result<DivergenceValue> {
    let r = functional("Kullback-Leibler", |p, phi, lp| {
        if p <= 0.0 { phi } else { p * (p.ln() - lp) - p + phi }
    })
    .integrate(d)?;
    Ok(simple(DivergenceKind::KL, None, r))
}

/// `∫ |p − φ|`, range `[0, 2]`.
pub fn total_variation(d: &GridDensity) -> Result<DivergenceValue> {
    let r = functional("total variation", |p, phi, _| (p - phi).abs()).integrate(d)?;
    Ok(simple(DivergenceKind::TV, None, r))
}

/// Squared Hellinger distance `∫ (√p − √φ)²`.
pub fn hellinger(d: &GridDensity) -> Result<DivergenceValue> {
    let r = functional("Hellinger", |p, phi, _| {
        let s = p.sqrt() - phi.sqrt();
        s * s
    })
    .integrate(d)?;
    Ok(simple(DivergenceKind::Hellinger, None, r))
}

/// Dispatch by kind; `alpha` is ignored by functionals without an index.
pub fn divergence(d: &GridDensity, kind: DivergenceKind, alpha: f64) -> Result<DivergenceValue> {
    match kind {
        DivergenceKind::Renyi => renyi(d, alpha),
        DivergenceKind::Tsallis => tsallis(d, alpha),
        DivergenceKind::Chi2 => chi2(d),
        DivergenceKind::PearsonVajda => pearson_vajda(d, alpha),
        DivergenceKind::KL => kl(d),
        DivergenceKind::TV => total_variation(d),
        DivergenceKind::Hellinger => hellinger(d),
    }
}

/// `T_α` from `D_α`.
pub fn t_from_d(dval: f64, alpha: f64) -> f64 {
    ((alpha - 1.0) * dval).exp_m1() / (alpha - 1.0)
}

/// `D_α` from `T_α`.
pub fn d_from_t(tval: f64, alpha: f64) -> f64 {
    ((alpha - 1.0) * tval).ln_1p() / (alpha - 1.0)
}

/// Density on a product grid, stored row-major with `x` as the slow index.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid2D {
    spec_x: GridSpec,
    spec_y: GridSpec,
    values: Vec<f64>,
}

impl Grid2D {
    pub fn new(spec_x: GridSpec, spec_y: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec_x.points() * spec_y.points() {
            return Err(Error::InvalidParameter("2-D grid has the wrong number of values".into()));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::NegativeDensity { x: f64::NAN, value: *v });
        }
        Ok(Self { spec_x, spec_y, values })
    }

    /// `p(x) q(y)` from two trapezoid-weighted grids.
    pub fn product(px: &GridDensity, py: &GridDensity) -> Result<Self> {
        let mut values = Vec::with_capacity(px.values().len() * py.values().len());
        for &a in px.values() {
            values.extend(py.values().iter().map(|&b| a * b));
        }
        Self::new(*px.spec(), *py.spec(), values)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.spec_y.points() + j]
    }

    pub fn marginal_x(&self) -> Result<GridDensity> {
        let wy = trapezoid_weights(&self.spec_y);
        let ny = self.spec_y.points();
        let v = (0..self.spec_x.points())
            .map(|i| (0..ny).map(|j| wy[j] * self.get(i, j)).sum())
            .collect();
        GridDensity::new(self.spec_x, v)
    }

    pub fn marginal_y(&self) -> Result<GridDensity> {
        let wx = trapezoid_weights(&self.spec_x);
        let nx = self.spec_x.points();
        let v = (0..self.spec_y.points())
            .map(|j| (0..nx).map(|i| wx[i] * self.get(i, j)).sum())
            .collect();
        GridDensity::new(self.spec_y, v)
    }
}

/// Total χ² of a 2-D density from `φ ⊗ φ`, and the χ² of its two marginals.
pub fn chi2_2d(d2: &Grid2D) -> Result<(f64, f64, f64)> {
    let (wx, wy) = (trapezoid_weights(&d2.spec_x), trapezoid_weights(&d2.spec_y));
    let lmin = d2.spec_x.half_width().min(d2.spec_y.half_width());
    let windows = [0.25 * lmin, 0.5 * lmin, f64::INFINITY];
    let mut sums = [0.0; 3];
    for i in 0..d2.spec_x.points() {
        let x = d2.spec_x.node(i);
        for j in 0..d2.spec_y.points() {
            let y = d2.spec_y.node(j);
            let lp = ln_phi(x) + ln_phi(y);
            let diff = (d2.get(i, j) - lp.exp()).abs();
            let c = if diff == 0.0 { 0.0 } else { wx[i] * wy[j] * (2.0 * diff.ln() - lp).exp() };
            let r = x.abs().max(y.abs());
            for (k, &w) in windows.iter().enumerate() {
                if r <= w {
                    sums[k] += c;
                }
            }
        }
    }
    let tol = |v: f64| DOUBLING_TOL * v.abs() + 1e-14;
    if sums.iter().any(|v| !v.is_finite())
        || ((sums[1] - sums[0]).abs() > tol(sums[1]) && (sums[2] - sums[1]).abs() > tol(sums[2]))
    {
        return Err(Error::Diverged { what: "2-D chi-squared".into(), values: sums.to_vec() });
    }
    let mx = chi2(&d2.marginal_x()?)?.value;
    let my = chi2(&d2.marginal_y()?)?.value;
    Ok((sums[2], mx, my))
}

/// `φ(x)`.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}
