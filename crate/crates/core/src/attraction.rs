//! The subgaussian criterion `ψ(u) = E e^{−uX} e^{−βu²/2} < 1`, `β = α/(α−1)`,
//! and the two-point construction sitting exactly on its boundary.

use rayon::prelude::*;
use serde::Serialize;

use crate::density::Family;
use crate::{Error, Result};

/// `|ψ − 1|` below this counts as equality.
pub const EQUALITY_TOL: f64 = 1e-9;

const UNIFORM_STEPS: usize = 8000;
const GEOMETRIC_STEPS: usize = 200;
const MAX_WINDOW: f64 = 1e4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AttractionStatus {
    Converges,
    Boundary,
    Fails,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttractionVerdict {
    pub status: AttractionStatus,
    /// Laplace argument `t` with `E e^{tX} e^{−βt²/2}` maximal; absent when converging.
    pub witness: Option<f64>,
    pub alpha: f64,
    /// Step of the uniform part of the scan.
    pub scan_resolution: f64,
    /// Scan window `[−U, U]`.
    pub window: f64,
    /// Largest `ψ` at a local maximum away from the origin (`None` when there is none).
    pub psi_max: Option<f64>,
    pub evaluations: usize,
}

pub fn conjugate_index(alpha: f64) -> f64 {
    alpha / (alpha - 1.0)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must exceed 1")));
    }
    Ok(())
}

/// `log ψ(u)`.
pub fn log_psi(f: &Family, u: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if u == 0.0 {
        return Ok(0.0);
    }
    Ok(f.log_laplace(-u)? - 0.5 * conjugate_index(alpha) * u * u)
}

pub fn psi(f: &Family, u: f64, alpha: f64) -> Result<f64> {
    log_psi(f, u, alpha).map(f64::exp)
}

/// Window beyond which `ψ < 1` follows from an explicit bound on the Laplace
/// transform. `Ok(None)`: no such window exists for this law.
fn certified_window(f: &Family, beta: f64) -> Result<Option<f64>> {
    Ok(match f {
        // sinh(√3u)/(√3u) ≤ e^{√3u}/(2√3u)
        Family::Uniform => Some(2.0 * 3f64.sqrt() / beta + 1.0),
        // Σ w e^{σ²u²/2} ≤ e^{σ²_max u²/2}
        Family::GaussianMixture(cs) => {
            let smax = cs.iter().map(|c| c.variance).fold(0.0, f64::max);
            if smax < beta {
                Some(4.0)
            } else {
                None
            }
        }
        // (p e^{aqu} + q e^{−apu}) e^{b²u²/2} ≤ e^{a max(p,q)|u| + b²u²/2}
        Family::BernoulliGaussian { p, a, b } => {
            let b2 = b * b;
            if b2 < beta {
                Some(2.0 * a * p.max(1.0 - p) / (beta - b2) + 1.0)
            } else {
                None
            }
        }
        Family::ExpSeries(sigmas) => Some(exp_series_window(sigmas, beta)),
        Family::CustomGrid(_) => {
            return Err(Error::Inconclusive(
                "a sampled density carries no analytic tail certificate".into(),
            ))
        }
    })
}

/// With `v = u²/2`, `ψ ≤ e^{(1−β)v} Σ|σ_k| v^k/k!`, which decreases once `v ≥ K/(β−1)`.
fn exp_series_window(sigmas: &[f64], beta: f64) -> f64 {
    let bound = |v: f64| {
        let mut term = 1.0;
        let mut acc = sigmas[0].abs();
        for (k, s) in sigmas.iter().enumerate().skip(1) {
            term *= v / k as f64;
            acc += s.abs() * term;
        }
        (1.0 - beta) * v + acc.ln()
    };
    let mut v = (sigmas.len() as f64 / (beta - 1.0)).max(1.0);
    while bound(v) >= 0.0 {
        v *= 2.0;
    }
    (2.0 * v).sqrt() + 1.0
}

/// Symmetric scan nodes on `[−U, U]`: uniform plus geometric refinement near 0.
fn scan_nodes(window: f64) -> (Vec<f64>, f64) {
    let step = window / UNIFORM_STEPS as f64;
    let mut pos: Vec<f64> = (1..=UNIFORM_STEPS).map(|i| i as f64 * step).collect();
    let lo = (1e-6f64).ln();
    let hi = step.ln();
    pos.extend((0..GEOMETRIC_STEPS).map(|i| (lo + (hi - lo) * i as f64 / GEOMETRIC_STEPS as f64).exp()));
    pos.sort_by(f64::total_cmp);
    pos.dedup();
    let mut nodes: Vec<f64> = pos.iter().rev().map(|u| -u).collect();
    nodes.push(0.0);
    nodes.extend(pos);
    (nodes, step)
}

fn golden_max(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..200 {
        if b - a <= 1e-14 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
    }
    if gc > gd {
        (c, gc)
    } else {
        (d, gd)
    }
}

struct Scan {
    /// `(u, log ψ)` at refined local maxima with `u ≠ 0`.
    maxima: Vec<(f64, f64)>,
    resolution: f64,
    evaluations: usize,
}

fn scan(f: &Family, alpha: f64, window: f64) -> Result<Scan> {
    let (nodes, resolution) = scan_nodes(window);
    let vals: Vec<f64> =
        nodes.par_iter().map(|&u| log_psi(f, u, alpha)).collect::<Result<_>>()?;
    let g = |u: f64| log_psi(f, u, alpha).unwrap_or(f64::NEG_INFINITY);
    let mut maxima = Vec::new();
    let last = nodes.len() - 1;
    for i in 0..=last {
        if nodes[i] == 0.0 {
            continue;
        }
        let left = if i > 0 { vals[i - 1] } else { f64::NEG_INFINITY };
        let right = if i < last { vals[i + 1] } else { f64::NEG_INFINITY };
        if vals[i] >= left && vals[i] >= right {
            let a = nodes[i.saturating_sub(1)];
            let b = nodes[(i + 1).min(last)];
            // never let the bracket reach the origin, where ψ = 1 trivially
            let (a, b) = if nodes[i] > 0.0 { (a.max(0.5 * nodes[i]), b) } else { (a, b.min(0.5 * nodes[i])) };
            let (u, v) = golden_max(g, a, b);
            maxima.push(if v >= vals[i] { (u, v) } else { (nodes[i], vals[i]) });
        }
    }
    Ok(Scan { maxima, resolution, evaluations: nodes.len() })
}

/// Decides `max_{u≠0} ψ(u)` against 1.
pub fn classify(f: &Family, alpha: f64) -> Result<AttractionVerdict> {
    check_alpha(alpha)?;
    let beta = conjugate_index(alpha);
    let verdict = |status, witness: Option<f64>, s: &Scan, window, psi_max| AttractionVerdict {
        status,
        witness: witness.map(|u: f64| -u),
        alpha,
        scan_resolution: s.resolution,
        window,
        psi_max,
        evaluations: s.evaluations,
    };
    match certified_window(f, beta)? {
        Some(window) => {
            let s = scan(f, alpha, window)?;
            let best = s.maxima.iter().copied().max_by(|x, y| x.1.total_cmp(&y.1));
            let psi_max = best.map(|b| b.1.exp());
            Ok(match best {
                Some((u, v)) if v.exp() - 1.0 > EQUALITY_TOL => {
                    verdict(AttractionStatus::Fails, Some(u), &s, window, psi_max)
                }
                Some((u, v)) if (v.exp() - 1.0).abs() <= EQUALITY_TOL => {
                    verdict(AttractionStatus::Boundary, Some(u), &s, window, psi_max)
                }
                _ => verdict(AttractionStatus::Converges, None, &s, window, psi_max),
            })
        }
        None => {
            // ψ is unbounded; widen until it crosses 1
            let mut window = 8.0;
            let mut evaluations = 0;
            while window <= MAX_WINDOW {
                let mut s = scan(f, alpha, window)?;
                evaluations += s.evaluations;
                s.evaluations = evaluations;
                let (nodes, _) = scan_nodes(window);
                let hit = nodes
                    .iter()
                    .copied()
                    .filter(|&u| u != 0.0)
                    .map(|u| (u, log_psi(f, u, alpha).unwrap_or(f64::NEG_INFINITY)))
                    .find(|&(_, v)| v.exp() - 1.0 > EQUALITY_TOL);
                if let Some((u, v)) = hit {
                    return Ok(verdict(AttractionStatus::Fails, Some(u), &s, window, Some(v.exp())));
                }
                window *= 2.0;
            }
            Err(Error::Inconclusive(format!(
                "no tail certificate for {f} and psi stays below 1 on |u| <= {MAX_WINDOW}"
            )))
        }
    }
}

/// Subgaussian constant `(p−q)/(2(log p − log q))` of the two-point law, `1/4` at `p = ½`.
pub fn bernoulli_sigma2(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "p = {p} outside (0, 1)");
    // log p − log q = 2 atanh(p − q)
    let d = 2.0 * p - 1.0;
    if d.abs() < 1e-4 {
        let d2 = d * d;
        return 0.25 / (1.0 + d2 / 3.0 + d2 * d2 / 5.0 + d2 * d2 * d2 / 7.0);
    }
    d / (4.0 * d.atanh())
}

/// Nonzero `t` where `p e^{qt} + q e^{−pt} = e^{σ²t²/2}`.
pub fn bernoulli_equality_point(p: f64) -> f64 {
    -2.0 * (p.ln() - (1.0 - p).ln())
}

/// `(a, b)` with `pq a² + b² = 1` and `σ² a² + b² = 2`.
pub fn bernoulli_gaussian_construct(p: f64) -> Result<(f64, f64)> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} outside (0, 1)")));
    }
    let pq = p * (1.0 - p);
    let sigma2 = bernoulli_sigma2(p);
    if sigma2 <= 2.0 * pq {
        return Err(Error::ConditionFailed { p, sigma2, two_pq: 2.0 * pq });
    }
    let a = (1.0 / (sigma2 - pq)).sqrt();
    let b = ((sigma2 - 2.0 * pq) / (sigma2 - pq)).sqrt();
    Ok((a, b))
}

/// The constructed law itself.
pub fn critical_bernoulli_gaussian(p: f64) -> Result<Family> {
    let (a, b) = bernoulli_gaussian_construct(p)?;
    Family::bernoulli_gaussian(p, a, b)
}

/// Root `p₀ ∈ (0, ½)` of `σ²(p) = 2pq`.
pub fn condition_threshold() -> f64 {
    let h = |p: f64| bernoulli_sigma2(p) - 2.0 * p * (1.0 - p);
    let (mut lo, mut hi) = (1e-9, 0.5);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_of_normal() {
        let z = Family::standard_normal();
        assert_eq!(psi(&z, 0.0, 2.0).unwrap(), 1.0);
        for u in [0.3f64, -1.7, 4.0] {
            assert!((psi(&z, u, 2.0).unwrap() - (-u * u / 2.0).exp()).abs() < 1e-15);
        }
        assert!(psi(&z, 1.0, 1.0).is_err());
    }

    #[test]
    fn sigma2_values() {
        assert_eq!(bernoulli_sigma2(0.5), 0.25);
        for e in [1e-3, 1e-5, 1e-7] {
            assert!((bernoulli_sigma2(0.5 + e) - 0.25).abs() < e);
        }
        let want = (-2.0 / 3.0) / (2.0 * (0.2f64).ln());
        assert!((bernoulli_sigma2(1.0 / 6.0) - want).abs() < 1e-15);
        for p in [0.1, 0.3] {
            assert!((bernoulli_sigma2(p) - bernoulli_sigma2(1.0 - p)).abs() < 1e-15);
        }
    }

    #[test]
    fn threshold_root() {
        let p0 = condition_threshold();
        let h = |p: f64| bernoulli_sigma2(p) - 2.0 * p * (1.0 - p);
        assert!(h(p0).abs() < 1e-9);
        assert!(h(p0 / 2.0) > 0.0);
        assert!(h((p0 + 0.5) / 2.0) < 0.0);
        assert!(matches!(bernoulli_gaussian_construct(0.5), Err(Error::ConditionFailed { .. })));
        assert!(matches!(bernoulli_gaussian_construct(1.0 / 6.0), Err(Error::ConditionFailed { .. })));
    }

    #[test]
    fn construct_standardized() {
        let (p, q) = (0.05, 0.95);
        let (a, b) = bernoulli_gaussian_construct(p).unwrap();
        assert!((p * q * a * a + b * b - 1.0).abs() < 1e-12);
        assert!((bernoulli_sigma2(p) * a * a + b * b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn equality_point_of_two_point_law() {
        let p = 0.07;
        let q = 1.0 - p;
        let t = bernoulli_equality_point(p);
        let lhs = p * (q * t).exp() + q * (-p * t).exp();
        assert!((lhs.ln() - bernoulli_sigma2(p) * t * t / 2.0).abs() < 1e-13);
    }

    #[test]
    fn verdicts() {
        assert_eq!(classify(&Family::Uniform, 2.0).unwrap().status, AttractionStatus::Converges);
        let heavy = Family::mixture(&[(0.5, 0.75), (2.5, 0.25)]).unwrap();
        let v = classify(&heavy, 2.0).unwrap();
        assert_eq!(v.status, AttractionStatus::Fails);
        assert!(psi(&heavy, -v.witness.unwrap(), 2.0).unwrap() > 1.0);
    }

    #[test]
    fn critical_construction_is_boundary() {
        for p in [0.05, 0.9] {
            let f = critical_bernoulli_gaussian(p).unwrap();
            let v = classify(&f, 2.0).unwrap();
            assert_eq!(v.status, AttractionStatus::Boundary, "{v:?}");
            assert!((v.psi_max.unwrap() - 1.0).abs() < 1e-8);
            let (a, _) = bernoulli_gaussian_construct(p).unwrap();
            let t0 = bernoulli_equality_point(p) / a;
            assert!((v.witness.unwrap() - t0).abs() < 1e-5 * t0.abs(), "{v:?} t0={t0}");
        }
    }
}
