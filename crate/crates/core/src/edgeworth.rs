//! Edgeworth polynomials `q_ν` and the coefficients `b_j` of the expansion
//! `T_α(Z_n) ≈ (α−1)^{−1} Σ_j b_j n^{−j}`.
//!
//! Everything combinatorial is symbolic: `q_ν` is a Hermite combination whose
//! coefficients are rational polynomials in the cumulants, and the Gaussian
//! integrals of their products are exact. Cumulants and `α` are substituted at
//! the end, either as floats or as exact rationals.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::density::{CumulantSet, GridDensity};
use crate::divergence::std_normal_pdf;
use crate::hermite::{gaussian_moment, hermite_eval, hermite_polys};
use crate::{Error, Result};

/// Default highest Edgeworth index, enough for `s ≤ 8`.
pub const DEFAULT_NU_MAX: usize = 6;

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn factorial(k: usize) -> BigInt {
    (1..=k).fold(BigInt::one(), |a, v| a * v)
}

/// Numbers the polynomial algebra can be evaluated in.
pub trait Scalar: Clone {
    fn zero_value() -> Self;
    fn one_value() -> Self;
    fn from_rational(r: &BigRational) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
}

impl Scalar for f64 {
    fn zero_value() -> Self {
        0.0
    }
    fn one_value() -> Self {
        1.0
    }
    fn from_rational(r: &BigRational) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
}

impl Scalar for BigRational {
    fn zero_value() -> Self {
        Zero::zero()
    }
    fn one_value() -> Self {
        One::one()
    }
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
}

/// Polynomial in `γ_3, γ_4, …` with rational coefficients. A key lists the
/// exponent of `γ_{i+3}` at position `i`, without trailing zeros.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GammaPoly {
    terms: BTreeMap<Vec<u32>, BigRational>,
}

impl GammaPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: BigRational) -> Self {
        let mut p = Self::zero();
        if !c.is_zero() {
            p.terms.insert(Vec::new(), c);
        }
        p
    }

    /// `c · Π γ_{i+3}^{e_i}`.
    pub fn monomial(exps: Vec<u32>, c: BigRational) -> Self {
        let mut exps = exps;
        while exps.last() == Some(&0) {
            exps.pop();
        }
        let mut p = Self::zero();
        if !c.is_zero() {
            p.terms.insert(exps, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &BigRational)> {
        self.terms.iter().map(|(k, v)| (k.as_slice(), v))
    }

    /// Whether `γ_order` appears in any monomial.
    pub fn depends_on(&self, order: usize) -> bool {
        order >= 3 && self.terms.keys().any(|k| k.get(order - 3).is_some_and(|&e| e > 0))
    }

    /// Highest cumulant order present.
    pub fn max_order(&self) -> usize {
        self.terms.keys().map(|k| k.len() + 2).max().unwrap_or(0)
    }

    pub fn add_assign(&mut self, other: &GammaPoly) {
        for (k, v) in &other.terms {
            let e = self.terms.entry(k.clone()).or_insert_with(BigRational::zero);
            *e += v;
            if e.is_zero() {
                self.terms.remove(k);
            }
        }
    }

    pub fn scale(&self, c: &BigRational) -> GammaPoly {
        if c.is_zero() {
            return Self::zero();
        }
        GammaPoly { terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect() }
    }

    pub fn mul(&self, other: &GammaPoly) -> GammaPoly {
        let mut out: BTreeMap<Vec<u32>, BigRational> = BTreeMap::new();
        for (ka, va) in &self.terms {
            for (kb, vb) in &other.terms {
                let n = ka.len().max(kb.len());
                let key: Vec<u32> = (0..n)
                    .map(|i| ka.get(i).copied().unwrap_or(0) + kb.get(i).copied().unwrap_or(0))
                    .collect();
                *out.entry(key).or_insert_with(BigRational::zero) += va * vb;
            }
        }
        out.retain(|_, v| !v.is_zero());
        GammaPoly { terms: out }
    }

    /// Evaluates with `gamma(k)` supplying `γ_k`.
    pub fn eval<S: Scalar>(&self, gamma: impl Fn(usize) -> S) -> S {
        let mut acc = S::zero_value();
        for (k, v) in &self.terms {
            let mut t = S::from_rational(v);
            for (i, &e) in k.iter().enumerate() {
                let g = gamma(i + 3);
                for _ in 0..e {
                    t = t.mul(&g);
                }
            }
            acc = acc.add(&t);
        }
        acc
    }
}

/// `Σ_k c_k H_k` with cumulant-polynomial coefficients.
pub type HermiteExpr = BTreeMap<usize, GammaPoly>;

/// Nonnegative solutions of `k_1 + 2k_2 + … + ν k_ν = ν`.
pub fn edgeworth_solutions(nu: usize) -> Vec<Vec<u32>> {
    fn rec(m: usize, rem: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if m == 0 {
            if rem == 0 {
                out.push(cur.iter().rev().copied().collect());
            }
            return;
        }
        for k in 0..=rem / m {
            cur.push(k as u32);
            rec(m - 1, rem - k * m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    // descend from k_ν to k_1, then reverse into k_1..k_ν
    rec(nu, nu, &mut Vec::new(), &mut out);
    out
}

/// Symbolic `q_ν = Σ H_{ν+2l} Π_m (1/k_m!) (γ_{m+2}/(m+2)!)^{k_m}`, `l = Σ k_m`.
pub fn edgeworth_poly_symbolic(nu: usize) -> HermiteExpr {
    let mut out = HermiteExpr::new();
    if nu == 0 {
        out.insert(0, GammaPoly::constant(rat(1)));
        return out;
    }
    for ks in edgeworth_solutions(nu) {
        let l: u32 = ks.iter().sum();
        let mut denom = BigInt::one();
        for (i, &k) in ks.iter().enumerate() {
            let m = i + 1;
            denom *= factorial(k as usize) * factorial(m + 2).pow(k);
        }
        let term = GammaPoly::monomial(ks.clone(), BigRational::new(BigInt::one(), denom));
        out.entry(nu + 2 * l as usize).or_default().add_assign(&term);
    }
    out.retain(|_, v| !v.is_zero());
    out
}

/// Polynomial in `x` with cumulant-polynomial coefficients.
type XPoly = Vec<GammaPoly>;

fn to_monomial_basis(h: &HermiteExpr) -> XPoly {
    let kmax = h.keys().copied().max().unwrap_or(0);
    let hs = hermite_polys(kmax);
    let mut out = vec![GammaPoly::zero(); kmax + 1];
    for (&k, coef) in h {
        for (i, c) in hs[k].coeffs().iter().enumerate() {
            if !c.is_zero() {
                out[i].add_assign(&coef.scale(c));
            }
        }
    }
    out
}

fn xpoly_mul(a: &XPoly, b: &XPoly) -> XPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![GammaPoly::zero(); a.len() + b.len() - 1];
    for (i, ca) in a.iter().enumerate() {
        if ca.is_zero() {
            continue;
        }
        for (j, cb) in b.iter().enumerate() {
            if !cb.is_zero() {
                out[i + j].add_assign(&ca.mul(cb));
            }
        }
    }
    out
}

fn xpoly_gaussian_integral(p: &XPoly) -> GammaPoly {
    let mut acc = GammaPoly::zero();
    for (k, c) in p.iter().enumerate() {
        if k % 2 == 0 && !c.is_zero() {
            acc.add_assign(&c.scale(&gaussian_moment(k)));
        }
    }
    acc
}

/// `∫ q_{ν_1} ⋯ q_{ν_k} φ` as a cumulant polynomial.
pub fn edgeworth_product_integral(nus: &[usize]) -> GammaPoly {
    let mut acc: XPoly = vec![GammaPoly::constant(rat(1))];
    for &nu in nus {
        acc = xpoly_mul(&acc, &to_monomial_basis(&edgeworth_poly_symbolic(nu)));
    }
    xpoly_gaussian_integral(&acc)
}

/// `P_m(γ) = Σ_{Σ l m_l = 2j, Σ m_l = m} (Π m_l!)^{−1} ∫ Π q_l^{m_l} φ` for each `m`.
type BStructure = Vec<(usize, GammaPoly)>;

fn b_structure(j: usize) -> Arc<BStructure> {
    static CACHE: OnceLock<Mutex<BTreeMap<usize, Arc<BStructure>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    if let Some(v) = cache.lock().unwrap().get(&j) {
        return Arc::clone(v);
    }
    let built = Arc::new(build_b_structure(j));
    cache.lock().unwrap().entry(j).or_insert(built).clone()
}

fn build_b_structure(j: usize) -> BStructure {
    let target = 2 * j;
    let lmax = 2 * j - 1;
    let qx: Vec<XPoly> =
        (0..=lmax).map(|l| to_monomial_basis(&edgeworth_poly_symbolic(l))).collect();
    let mut by_m: BTreeMap<usize, GammaPoly> = BTreeMap::new();

    struct Ctx<'a> {
        qx: &'a [XPoly],
        lmax: usize,
        out: &'a mut BTreeMap<usize, GammaPoly>,
    }
    fn dfs(ctx: &mut Ctx, l: usize, rem: usize, acc: &XPoly, m: usize, inv_fact: &BigRational) {
        if rem == 0 {
            let integral = xpoly_gaussian_integral(acc).scale(inv_fact);
            ctx.out.entry(m).or_default().add_assign(&integral);
            return;
        }
        if l > ctx.lmax || l > rem {
            return;
        }
        let mut cur = acc.clone();
        let mut w = inv_fact.clone();
        for k in 0..=rem / l {
            if k > 0 {
                cur = xpoly_mul(&cur, &ctx.qx[l]);
                w /= rat(k as i64);
            }
            dfs(ctx, l + 1, rem - k * l, &cur, m + k, &w);
        }
    }
    let mut ctx = Ctx { qx: &qx, lmax, out: &mut by_m };
    dfs(&mut ctx, 1, target, &vec![GammaPoly::constant(rat(1))], 0, &rat(1));
    by_m.into_iter().filter(|(_, p)| !p.is_zero()).collect()
}

/// `b_j` as a symbolic cumulant polynomial at rational `α`.
pub fn b_coefficient_poly(j: usize, alpha: &BigRational) -> GammaPoly {
    assert!(j >= 1, "b_j is defined for j >= 1");
    let mut acc = GammaPoly::zero();
    for (m, p) in b_structure(j).iter() {
        acc.add_assign(&p.scale(&falling_ff_rational(alpha, *m)));
    }
    acc
}

fn falling_ff_rational(alpha: &BigRational, m: usize) -> BigRational {
    (0..m).fold(rat(1), |acc, i| acc * (alpha - rat(i as i64)))
}

fn falling_ff_f64(alpha: f64, m: usize) -> f64 {
    (0..m).fold(1.0, |acc, i| acc * (alpha - i as f64))
}

/// Exact `b_j` for rational `α` and `γ` (`gammas[0] = γ_3`, missing orders are 0).
pub fn b_coefficient_exact(j: usize, alpha: &BigRational, gammas: &[BigRational]) -> BigRational {
    let g = |k: usize| gammas.get(k - 3).cloned().unwrap_or_else(BigRational::zero);
    b_structure(j)
        .iter()
        .map(|(m, p)| falling_ff_rational(alpha, *m) * p.eval(g))
        .fold(BigRational::zero(), |a, b| a + b)
}

fn require_order(gamma: &CumulantSet, need: usize) -> Result<()> {
    if gamma.max_order() < need {
        return Err(Error::Precondition(format!(
            "cumulants up to order {need} are required, only {} supplied",
            gamma.max_order()
        )));
    }
    Ok(())
}

/// `b_j(α, γ)`; needs cumulants up to `2j + 1`.
pub fn b_coefficient(j: usize, alpha: f64, gamma: &CumulantSet) -> Result<f64> {
    if j == 0 {
        return Err(Error::InvalidParameter("b_j is defined for j >= 1".into()));
    }
    require_order(gamma, 2 * j + 1)?;
    Ok(b_structure(j)
        .iter()
        .map(|(m, p)| falling_ff_f64(alpha, *m) * p.eval(|k| gamma.get(k)))
        .sum())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansionCoefficients {
    pub alpha: f64,
    pub s: usize,
    /// `b_1..=b_{s−2}`.
    pub b: Vec<f64>,
}

pub fn expansion_coefficients(s: usize, alpha: f64, gamma: &CumulantSet) -> Result<ExpansionCoefficients> {
    if s < 3 {
        return Err(Error::InvalidParameter(format!("expansion order s = {s} must be at least 3")));
    }
    let b = (1..=s - 2).map(|j| b_coefficient(j, alpha, gamma)).collect::<Result<_>>()?;
    Ok(ExpansionCoefficients { alpha, s, b })
}

/// `(α−1)^{−1} Σ_{j=1}^{s−2} b_j n^{−j}`.
pub fn predict_tsallis(n: usize, s: usize, alpha: f64, gamma: &CumulantSet) -> Result<f64> {
    let c = expansion_coefficients(s, alpha, gamma)?;
    let n = n as f64;
    Ok(c.b.iter().enumerate().map(|(i, b)| b / n.powi(i as i32 + 1)).sum::<f64>() / (alpha - 1.0))
}

/// `q_1..=q_ν` with the cumulants substituted.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeworthSet {
    /// `q[ν − 1]` lists `(k, coefficient of H_k)`.
    pub q: Vec<Vec<(usize, f64)>>,
    pub cumulants: CumulantSet,
}

impl EdgeworthSet {
    pub fn nu_max(&self) -> usize {
        self.q.len()
    }

    pub fn eval_q(&self, nu: usize, x: f64) -> f64 {
        self.q[nu - 1].iter().map(|&(k, c)| c * hermite_eval(k, x)).sum()
    }

    /// `φ(x) (1 + Σ_{ν≤ν_max} q_ν(x) n^{−ν/2})`.
    pub fn density(&self, x: f64, n: usize) -> f64 {
        let sn = (n as f64).sqrt();
        let corr: f64 = (1..=self.nu_max()).map(|nu| self.eval_q(nu, x) / sn.powi(nu as i32)).sum();
        std_normal_pdf(x) * (1.0 + corr)
    }

    /// Highest Hermite index appearing in `q_ν`.
    pub fn degree(&self, nu: usize) -> usize {
        self.q[nu - 1].iter().map(|&(k, _)| k).max().unwrap_or(0)
    }
}

/// Needs cumulants up to `ν_max + 2`.
pub fn q_polys(gamma: &CumulantSet, nu_max: usize) -> Result<EdgeworthSet> {
    require_order(gamma, nu_max + 2)?;
    let q = (1..=nu_max)
        .map(|nu| {
            edgeworth_poly_symbolic(nu)
                .into_iter()
                .map(|(k, p)| (k, p.eval(|r| gamma.get(r))))
                .filter(|(_, c)| *c != 0.0)
                .collect()
        })
        .collect();
    Ok(EdgeworthSet { q, cumulants: gamma.clone() })
}

/// Main-term Edgeworth density of `Z_n` at order `s`.
pub fn edgeworth_density(x: f64, n: usize, s: usize, gamma: &CumulantSet) -> Result<f64> {
    if s < 3 {
        return Err(Error::InvalidParameter(format!("expansion order s = {s} must be at least 3")));
    }
    Ok(q_polys(gamma, s - 2)?.density(x, n))
}

/// `sup_x φ(x)^{1/α} |H_s(x)|`.
pub fn a_s_constant(s: usize, alpha: f64) -> f64 {
    assert!(alpha > 1.0, "a_s needs alpha > 1");
    let norm = (2.0 * std::f64::consts::PI).powf(-0.5 / alpha);
    let g = |x: f64| norm * (-x * x / (2.0 * alpha)).exp() * hermite_eval(s, x).abs();
    // |H_s| is even in x
    let hi = 2.0 * s as f64 + 10.0;
    let step = 1e-3;
    let steps = (hi / step).ceil() as usize;
    let (mut best, mut best_i) = (f64::NEG_INFINITY, 0);
    for i in 0..=steps {
        let v = g(i as f64 * step);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let (mut a, mut b) = ((best_i as f64 - 1.0).max(0.0) * step, (best_i as f64 + 1.0) * step);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > 1e-13 {
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
    best.max(g(0.5 * (a + b)))
}

/// `M_n(s) = √(2(s−1) log n)`.
pub fn truncation_point(n: usize, s: usize) -> f64 {
    (2.0 * (s as f64 - 1.0) * (n as f64).ln()).max(0.0).sqrt()
}

/// `I(M) = ∫_{|x|≤M} (p_n/φ)^α φ` at `M = M_n(s)`.
pub fn truncated_integral(d_n: &GridDensity, s: usize, alpha: f64, n: usize) -> Result<f64> {
    let spec = d_n.spec();
    let m = truncation_point(n, s);
    if m > spec.half_width() {
        return Err(Error::Precondition(format!(
            "truncation point {m} exceeds the grid half-width {}",
            spec.half_width()
        )));
    }
    let integrand = |i: usize| {
        let x = spec.node(i);
        let p = d_n.values()[i];
        if p <= 0.0 {
            return 0.0;
        }
        (alpha * p.ln() + (1.0 - alpha) * (-0.5 * x * x - 0.5 * (2.0 * std::f64::consts::PI).ln()))
            .exp()
    };
    let h = spec.spacing();
    let inside: Vec<usize> = (0..spec.points()).filter(|&i| spec.node(i).abs() <= m).collect();
    let (Some(&i0), Some(&i1)) = (inside.first(), inside.last()) else {
        return Ok(0.0);
    };
    let vals: Vec<f64> = (i0..=i1).map(integrand).collect();
    let mut total: f64 = vals.iter().sum::<f64>() * h - 0.5 * h * (vals[0] + vals[vals.len() - 1]);
    // partial cells out to ±M by linear interpolation
    if i0 > 0 {
        let delta = spec.node(i0) + m;
        let (g0, g1) = (integrand(i0 - 1), vals[0]);
        let edge = g1 + (g0 - g1) * delta / h;
        total += 0.5 * delta * (edge + g1);
    }
    if i1 + 1 < spec.points() {
        let delta = m - spec.node(i1);
        let (g0, g1) = (vals[vals.len() - 1], integrand(i1 + 1));
        let edge = g0 + (g1 - g0) * delta / h;
        total += 0.5 * delta * (edge + g0);
    }
    Ok(total)
}

/// `(I − 1)/(α − 1)`, a lower bound for `T_α` when `α > 1`.
pub fn truncated_lower_bound(integral: f64, alpha: f64) -> f64 {
    (integral - 1.0) / (alpha - 1.0)
}
