use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;

use super::{CumulantSet, GridDensity};
use crate::{Error, Result};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Component of a centered Gaussian mixture.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixtureComponent {
    pub variance: f64,
    pub weight: f64,
}

/// Closed-form density families plus an escape hatch for sampled grids.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    /// Uniform on `[−√3, √3]`.
    Uniform,
    /// `Σ wᵢ N(0, σᵢ²)`.
    GaussianMixture(Vec<MixtureComponent>),
    /// `aξ + bZ` with `ξ` equal to `q` with probability `p` and `−p` with probability `q = 1 − p`.
    BernoulliGaussian { p: f64, a: f64, b: f64 },
    /// `φ(x) Σ_k σ_k H_{2k}(x) / (2^k k!)`, coefficients indexed from `σ_0 = 1`.
    ExpSeries(Vec<f64>),
    CustomGrid(Arc<GridDensity>),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}

impl Family {
    pub fn standard_normal() -> Self {
        Family::GaussianMixture(vec![MixtureComponent { variance: 1.0, weight: 1.0 }])
    }

    /// Validated mixture; weights must sum to 1.
    pub fn mixture(components: &[(f64, f64)]) -> Result<Self> {
        if components.is_empty() {
            return invalid("mixture needs at least one component");
        }
        let mut out = Vec::with_capacity(components.len());
        for &(variance, weight) in components {
            if !(variance.is_finite() && variance > 0.0) {
                return invalid(format!("mixture variance {variance} must be positive"));
            }
            if !(weight.is_finite() && weight > 0.0) {
                return invalid(format!("mixture weight {weight} must be positive"));
            }
            out.push(MixtureComponent { variance, weight });
        }
        let total: f64 = out.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return invalid(format!("mixture weights sum to {total}, not 1"));
        }
        Ok(Family::GaussianMixture(out))
    }

    pub fn bernoulli_gaussian(p: f64, a: f64, b: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return invalid(format!("p = {p} must lie in (0, 1)"));
        }
        if !a.is_finite() || a < 0.0 {
            return invalid(format!("a = {a} must be nonnegative"));
        }
        if !(b.is_finite() && b > 0.0) {
            return invalid(format!("b = {b} must be positive"));
        }
        Ok(Family::BernoulliGaussian { p, a, b })
    }

    /// Chooses `b` so that `pq a² + b² = 1`.
    pub fn bernoulli_gaussian_standardized(p: f64, a: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return invalid(format!("p = {p} must lie in (0, 1)"));
        }
        let b2 = 1.0 - p * (1.0 - p) * a * a;
        if !(b2 > 0.0) {
            return invalid(format!("pq a^2 = {} leaves no room for a Gaussian part", 1.0 - b2));
        }
        Self::bernoulli_gaussian(p, a, b2.sqrt())
    }

    /// `sigmas[0]` must be 1; the density itself is validated on materialization.
    pub fn exp_series(sigmas: Vec<f64>) -> Result<Self> {
        if sigmas.is_empty() || (sigmas[0] - 1.0).abs() > 1e-12 {
            return invalid("exp_series needs sigma_0 = 1");
        }
        if sigmas.iter().any(|s| !s.is_finite()) {
            return invalid("exp_series coefficients must be finite");
        }
        if sigmas.len() > 40 {
            return invalid("exp_series supports at most 40 coefficients");
        }
        Ok(Family::ExpSeries(sigmas))
    }

    pub fn custom(d: GridDensity) -> Self {
        Family::CustomGrid(Arc::new(d))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Uniform => "uniform",
            Family::GaussianMixture(_) => "gaussian_mixture",
            Family::BernoulliGaussian { .. } => "bernoulli_gaussian",
            Family::ExpSeries(_) => "exp_series",
            Family::CustomGrid(_) => "custom_grid",
        }
    }

    /// `log E e^{izX}` for complex `z`, continued analytically. Only the real
    /// part and the phase modulo 2π are meaningful.
    pub fn log_cf(&self, z: Complex64) -> Complex64 {
        match self {
            Family::Uniform => log_sinc(z * SQRT_3),
            Family::GaussianMixture(cs) => {
                let z2 = z * z;
                log_sum_exp(cs.iter().map(|c| c.weight.ln() - 0.5 * c.variance * z2))
            }
            Family::BernoulliGaussian { p, a, b } => {
                let (p, q) = (*p, 1.0 - *p);
                let i = Complex64::i();
                let two_point =
                    log_sum_exp([p.ln() + i * (a * q) * z, q.ln() - i * (a * p) * z].into_iter());
                two_point - 0.5 * b * b * z * z
            }
            Family::ExpSeries(sigmas) => {
                let w = -0.5 * z * z;
                let mut term = Complex64::new(1.0, 0.0);
                let mut acc = Complex64::new(sigmas[0], 0.0);
                for (k, s) in sigmas.iter().enumerate().skip(1) {
                    term = term * w / k as f64;
                    acc += term * *s;
                }
                w + acc.ln()
            }
            Family::CustomGrid(d) => grid_log_cf(d, z),
        }
    }

    pub fn cf(&self, t: f64) -> Complex64 {
        if t == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        self.log_cf(Complex64::new(t, 0.0)).exp()
    }

    /// `log E e^{uX}`.
    pub fn log_laplace(&self, u: f64) -> Result<f64> {
        if u == 0.0 {
            return Ok(0.0);
        }
        if !u.is_finite() {
            return invalid(format!("Laplace argument {u} is not finite"));
        }
        match self {
            Family::CustomGrid(d) => grid_log_laplace(d, u),
            _ => {
                let v = self.log_cf(Complex64::new(0.0, -u)).re;
                if v.is_nan() {
                    return Err(Error::InvalidParameter(format!(
                        "Laplace transform of {self} is not positive at u = {u}"
                    )));
                }
                Ok(v)
            }
        }
    }

    /// `E e^{uX}`.
    pub fn laplace(&self, u: f64) -> Result<f64> {
        self.log_laplace(u).map(f64::exp)
    }

    /// Closed-form density, `None` for sampled grids.
    pub fn pdf(&self, x: f64) -> Option<f64> {
        Some(match self {
            Family::Uniform => {
                if x.abs() <= SQRT_3 {
                    0.5 / SQRT_3
                } else {
                    0.0
                }
            }
            Family::GaussianMixture(cs) => {
                cs.iter().map(|c| c.weight * normal_pdf(x, c.variance)).sum()
            }
            Family::BernoulliGaussian { p, a, b } => {
                let q = 1.0 - p;
                let b2 = b * b;
                p * normal_pdf(x - a * q, b2) + q * normal_pdf(x + a * p, b2)
            }
            Family::ExpSeries(sigmas) => {
                let mut h = vec![0.0; 2 * sigmas.len()];
                crate::hermite::hermite_eval_into(x, &mut h);
                let mut acc = 0.0;
                let mut fact = 1.0; // 2^k k!
                for (k, s) in sigmas.iter().enumerate() {
                    if k > 0 {
                        fact *= 2.0 * k as f64;
                    }
                    acc += s / fact * h[2 * k];
                }
                normal_pdf(x, 1.0) * acc
            }
            Family::CustomGrid(_) => return None,
        })
    }

    /// `E X^k`, analytic where available.
    pub fn raw_moment(&self, k: usize) -> f64 {
        match self {
            Family::Uniform => {
                if k % 2 == 1 {
                    0.0
                } else {
                    3f64.powi(k as i32 / 2) / (k + 1) as f64
                }
            }
            Family::GaussianMixture(cs) => {
                if k % 2 == 1 {
                    0.0
                } else {
                    let dfact = double_factorial(k);
                    cs.iter().map(|c| c.weight * c.variance.powi(k as i32 / 2) * dfact).sum()
                }
            }
            Family::BernoulliGaussian { .. } => {
                let kappa: Vec<f64> = (1..=k).map(|j| self.bg_cumulant(j)).collect();
                moments_from_cumulants(&kappa)[k]
            }
            Family::ExpSeries(sigmas) => {
                // x^k = Σ_j k!/((k−2j)! j! 2^j) H_{k−2j}; the normal moments are
                // c_{2i} = σ_i (2i)!/(2^i i!) and zero for odd order.
                let c = |m: usize| -> f64 {
                    if m % 2 == 1 {
                        return 0.0;
                    }
                    let i = m / 2;
                    let s = sigmas.get(i).copied().unwrap_or(0.0);
                    s * (1..=m).map(|v| v as f64).product::<f64>()
                        / (2f64.powi(i as i32) * (1..=i).map(|v| v as f64).product::<f64>())
                };
                crate::hermite::monomial_to_hermite(k)
                    .into_iter()
                    .map(|(m, coef)| num_traits::ToPrimitive::to_f64(&coef).unwrap() * c(m))
                    .sum()
            }
            Family::CustomGrid(d) => d.moment(k),
        }
    }

    fn bg_cumulant(&self, k: usize) -> f64 {
        let Family::BernoulliGaussian { p, a, b } = self else { unreachable!() };
        let q = 1.0 - p;
        let xi_moments: Vec<f64> =
            (0..=k).map(|j| p * q.powi(j as i32) + q * (-p).powi(j as i32)).collect();
        let kx = cumulants_from_moments(&xi_moments);
        let mut v = a.powi(k as i32) * kx[k - 1];
        if k == 2 {
            v += b * b;
        }
        v
    }

    pub fn mean_variance(&self) -> (f64, f64) {
        let m1 = self.raw_moment(1);
        (m1, self.raw_moment(2) - m1 * m1)
    }

    /// Cumulants `γ_3..=γ_K`; fails unless the family is standardized.
    pub fn cumulants(&self, k_max: usize) -> Result<CumulantSet> {
        let (mean, variance) = self.mean_variance();
        if mean.abs() > 1e-8 || (variance - 1.0).abs() > 1e-8 {
            return Err(Error::NotStandardized { mean, variance });
        }
        if let Family::BernoulliGaussian { .. } = self {
            return Ok(CumulantSet::new((3..=k_max).map(|k| self.bg_cumulant(k)).collect()));
        }
        let moments: Vec<f64> = (0..=k_max).map(|k| self.raw_moment(k)).collect();
        let kappa = cumulants_from_moments(&moments);
        Ok(CumulantSet::new(kappa.into_iter().skip(2).collect()))
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())?;
        match self {
            Family::Uniform => Ok(()),
            Family::GaussianMixture(cs) => {
                let parts: Vec<String> =
                    cs.iter().map(|c| format!("{}:{}", c.variance, c.weight)).collect();
                write!(f, " components={}", parts.join(","))
            }
            Family::BernoulliGaussian { p, a, b } => write!(f, " p={p} a={a} b={b}"),
            Family::ExpSeries(s) => {
                let parts: Vec<String> = s.iter().map(|v| v.to_string()).collect();
                write!(f, " sigmas={}", parts.join(","))
            }
            Family::CustomGrid(d) => {
                write!(f, " points={} half_width={}", d.spec().points(), d.spec().half_width())
            }
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("{key}={v} is not a number")))?;
    if !x.is_finite() {
        return invalid(format!("{key}={v} is not finite"));
    }
    Ok(x)
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| parse_f64(key, s.trim())).collect()
}

/// Parses `NAME key=value…`, optionally written `family=NAME key=value…`.
///
/// Keys per family:
/// - `gaussian_mixture components=s1:w1,s2:w2` (defaults to the standard normal)
/// - `bernoulli_gaussian p=… a=… [b=…]`, `b` defaulting to the standardizing value
/// - `exp_series sigmas=1,0,0.3` or individual `sigma2=0.3`
/// - `custom_grid path=FILE` reading a two-column `x,p` CSV
impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut tokens = s.split_whitespace();
        let Some(first) = tokens.next() else {
            return invalid("empty family specification");
        };
        let name = first.strip_prefix("family=").unwrap_or(first);
        let mut kv = Vec::new();
        for tok in tokens {
            let Some((k, v)) = tok.split_once('=') else {
                return invalid(format!("expected key=value, got '{tok}'"));
            };
            kv.push((k, v));
        }
        let unknown = |k: &str| invalid(format!("unknown key '{k}' for family {name}"));
        match name {
            "uniform" => match kv.first() {
                Some((k, _)) => unknown(k),
                None => Ok(Family::Uniform),
            },
            "gaussian_mixture" => {
                let mut comps = vec![(1.0, 1.0)];
                for (k, v) in kv {
                    if k != "components" {
                        return unknown(k);
                    }
                    comps = v
                        .split(',')
                        .map(|c| {
                            let (s, w) = c.split_once(':').ok_or_else(|| {
                                Error::InvalidParameter(format!(
                                    "mixture component '{c}' is not variance:weight"
                                ))
                            })?;
                            Ok((parse_f64("components", s)?, parse_f64("components", w)?))
                        })
                        .collect::<Result<_>>()?;
                }
                Family::mixture(&comps)
            }
            "bernoulli_gaussian" => {
                let (mut p, mut a, mut b) = (None, None, None);
                for (k, v) in kv {
                    let x = parse_f64(k, v)?;
                    match k {
                        "p" => p = Some(x),
                        "a" => a = Some(x),
                        "b" => b = Some(x),
                        _ => return unknown(k),
                    }
                }
                let p = p.ok_or_else(|| Error::InvalidParameter("bernoulli_gaussian needs p".into()))?;
                if !(p > 0.0 && p < 1.0) {
                    return invalid(format!("p = {p} must lie in (0, 1)"));
                }
                let a = a.ok_or_else(|| Error::InvalidParameter("bernoulli_gaussian needs a".into()))?;
                match b {
                    Some(b) => Family::bernoulli_gaussian(p, a, b),
                    None => Family::bernoulli_gaussian_standardized(p, a),
                }
            }
            "exp_series" => {
                let mut sigmas = vec![1.0];
                for (k, v) in kv {
                    if k == "sigmas" {
                        sigmas = parse_list(k, v)?;
                    } else if let Some(idx) = k.strip_prefix("sigma") {
                        let idx: usize = idx
                            .parse()
                            .map_err(|_| Error::InvalidParameter(format!("bad key '{k}'")))?;
                        if idx > 40 {
                            return invalid(format!("{k}: index too large"));
                        }
                        if sigmas.len() <= idx {
                            sigmas.resize(idx + 1, 0.0);
                        }
                        sigmas[idx] = parse_f64(k, v)?;
                    } else {
                        return unknown(k);
                    }
                }
                Family::exp_series(sigmas)
            }
            "custom_grid" => {
                let mut path = None;
                for (k, v) in kv {
                    match k {
                        "path" => path = Some(v),
                        _ => return unknown(k),
                    }
                }
                let path =
                    path.ok_or_else(|| Error::InvalidParameter("custom_grid needs path=FILE".into()))?;
                let file = std::fs::File::open(path)
                    .map_err(|e| Error::Input(format!("{path}: {e}")))?;
                Ok(Family::custom(GridDensity::from_csv(file)?))
            }
            other => invalid(format!(
                "unknown family '{other}' (expected uniform, gaussian_mixture, bernoulli_gaussian, exp_series, custom_grid)"
            )),
        }
    }
}

pub(crate) fn normal_pdf(x: f64, variance: f64) -> f64 {
    (-0.5 * x * x / variance).exp() / (2.0 * PI * variance).sqrt()
}

fn double_factorial(k: usize) -> f64 {
    (1..k).step_by(2).map(|j| j as f64).product()
}

/// `κ_n = μ_n − Σ_{m<n} C(n−1, m−1) κ_m μ_{n−m}`; input `μ_0..μ_K`, output `κ_1..κ_K`.
pub fn cumulants_from_moments(mu: &[f64]) -> Vec<f64> {
    let kmax = mu.len() - 1;
    let mut kappa = vec![0.0; kmax + 1];
    for n in 1..=kmax {
        let mut v = mu[n];
        let mut binom = 1.0; // C(n−1, m−1)
        for m in 1..n {
            v -= binom * kappa[m] * mu[n - m];
            binom = binom * (n - m) as f64 / m as f64;
        }
        kappa[n] = v;
    }
    kappa.remove(0);
    kappa
}

/// Inverse of [`cumulants_from_moments`]: input `κ_1..κ_K`, output `μ_0..μ_K`.
pub fn moments_from_cumulants(kappa: &[f64]) -> Vec<f64> {
    let kmax = kappa.len();
    let mut mu = vec![0.0; kmax + 1];
    mu[0] = 1.0;
    for n in 1..=kmax {
        let mut v = 0.0;
        let mut binom = 1.0;
        for m in 1..=n {
            v += binom * kappa[m - 1] * mu[n - m];
            binom = binom * (n - m) as f64 / m as f64;
        }
        mu[n] = v;
    }
    mu
}

fn log_sum_exp(terms: impl Iterator<Item = Complex64>) -> Complex64 {
    let terms: Vec<Complex64> = terms.collect();
    let shift = terms.iter().map(|t| t.re).fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return Complex64::new(f64::NEG_INFINITY, 0.0);
    }
    let s: Complex64 = terms.iter().map(|t| (t - shift).exp()).sum();
    s.ln() + shift
}

/// `log(sin w / w)` without overflow for large `|Im w|`.
fn log_sinc(w: Complex64) -> Complex64 {
    if w.norm() < 1e-3 {
        let w2 = w * w;
        return (1.0 - w2 / 6.0 + w2 * w2 / 120.0 - w2 * w2 * w2 / 5040.0).ln();
    }
    log_sin(w) - w.ln()
}

fn log_sin(w: Complex64) -> Complex64 {
    if w.im < 0.0 {
        return log_sin(w.conj()).conj();
    }
    // sin w = e^{−iw} (1 − e^{2iw}) · i/2 with |e^{2iw}| ≤ 1 here.
    let i = Complex64::i();
    -i * w + (1.0 - (2.0 * i * w).exp()).ln() + (0.5 * i).ln()
}

fn grid_log_cf(d: &GridDensity, z: Complex64) -> Complex64 {
    let xs = d.spec();
    let shift = d
        .values()
        .iter()
        .enumerate()
        .filter(|(_, p)| **p > 0.0)
        .map(|(i, _)| -z.im * xs.node(i))
        .fold(f64::NEG_INFINITY, f64::max);
    let i = Complex64::i();
    let mut acc = Complex64::new(0.0, 0.0);
    for (idx, (&p, &w)) in d.values().iter().zip(d.weights()).enumerate() {
        if p > 0.0 {
            acc += w * p * (i * z * xs.node(idx) - shift).exp();
        }
    }
    acc.ln() + shift
}

fn grid_log_laplace(d: &GridDensity, u: f64) -> Result<f64> {
    let spec = d.spec();
    let n = spec.points();
    let edge = (n / 100).max(1);
    let terms: Vec<f64> = (0..n)
        .map(|i| {
            let (p, w) = (d.values()[i], d.weights()[i]);
            if p > 0.0 { (w * p).ln() + u * spec.node(i) } else { f64::NEG_INFINITY }
        })
        .collect();
    let shift = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = terms.iter().map(|t| (t - shift).exp()).sum();
    let tail: f64 = terms[..edge].iter().chain(&terms[n - edge..]).map(|t| (t - shift).exp()).sum();
    let budget = 1e-6;
    if tail > budget * total {
        return Err(Error::TailMass { mass: tail / total, budget });
    }
    Ok(total.ln() + shift)
}
