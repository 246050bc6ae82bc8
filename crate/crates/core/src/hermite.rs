//! Exact polynomial algebra for Chebyshev–Hermite polynomials.
//!
//! `H_k` here is the probabilists' family, orthogonal for the standard
//! Gaussian weight with `∫ H_k² φ = k!`. Coefficients are arbitrary-precision
//! rationals since they leave the 64-bit range in the mid twenties.

use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::{Error, Result};

/// Moment table size large enough for products of Edgeworth polynomials up to s = 8.
pub const DEFAULT_K_MAX: usize = 48;

/// Polynomial with exact rational coefficients, `coeffs[k]` multiplying `x^k`.
/// Trailing zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct RatPoly {
    coeffs: Vec<BigRational>,
}

impl RatPoly {
    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn x() -> Self {
        Self::monomial(1, BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        Self::from_coeffs(vec![c])
    }

    pub fn monomial(k: usize, c: BigRational) -> Self {
        let mut coeffs = vec![BigRational::zero(); k + 1];
        coeffs[k] = c;
        Self::from_coeffs(coeffs)
    }

    pub fn from_coeffs(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    /// Convenience constructor from integer coefficients.
    pub fn from_ints(coeffs: &[i64]) -> Self {
        Self::from_coeffs(coeffs.iter().map(|&c| BigRational::from_integer(c.into())).collect())
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// Coefficient of `x^k`, zero past the degree.
    pub fn coeff(&self, k: usize) -> BigRational {
        self.coeffs.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Horner evaluation in floating point. Prefer [`hermite_eval`] for `H_k`
    /// itself at large `|x|`.
    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c.to_f64().unwrap_or(f64::NAN))
    }

    /// True when every nonzero monomial has the parity of `k`.
    pub fn has_parity(&self, k: usize) -> bool {
        self.coeffs
            .iter()
            .enumerate()
            .all(|(i, c)| c.is_zero() || i % 2 == k % 2)
    }
}

impl Add for &RatPoly {
    type Output = RatPoly;
    fn add(self, rhs: &RatPoly) -> RatPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        RatPoly::from_coeffs((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &RatPoly {
    type Output = RatPoly;
    fn sub(self, rhs: &RatPoly) -> RatPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        RatPoly::from_coeffs((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &RatPoly {
    type Output = RatPoly;
    fn mul(self, rhs: &RatPoly) -> RatPoly {
        if self.is_zero() || rhs.is_zero() {
            return RatPoly::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        RatPoly::from_coeffs(out)
    }
}

impl Neg for &RatPoly {
    type Output = RatPoly;
    fn neg(self) -> RatPoly {
        RatPoly { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for RatPoly {
            type Output = RatPoly;
            fn $m(self, rhs: RatPoly) -> RatPoly {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// `H_k` built from `H_{k+1} = x H_k − k H_{k−1}`.
pub fn hermite_poly(k: usize) -> RatPoly {
    let mut prev = RatPoly::one();
    if k == 0 {
        return prev;
    }
    let mut cur = RatPoly::x();
    let x = RatPoly::x();
    for j in 1..k {
        let next = &(&x * &cur) - &prev.scale(&BigRational::from_integer(j.into()));
        prev = cur;
        cur = next;
    }
    cur
}

/// `H_0..=H_kmax` as exact polynomials.
pub fn hermite_polys(kmax: usize) -> Vec<RatPoly> {
    let mut out = Vec::with_capacity(kmax + 1);
    out.push(RatPoly::one());
    if kmax >= 1 {
        out.push(RatPoly::x());
    }
    let x = RatPoly::x();
    for j in 1..kmax {
        let next = &(&x * &out[j]) - &out[j - 1].scale(&BigRational::from_integer(j.into()));
        out.push(next);
    }
    out
}

/// Floating `H_k(x)` by the three-term recurrence.
pub fn hermite_eval(k: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if k == 0 {
        return prev;
    }
    for j in 1..k {
        let next = x * cur - j as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Fills `out[k] = H_k(x)` for `k < out.len()`.
pub fn hermite_eval_into(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for k in 2..out.len() {
        out[k] = x * out[k - 1] - (k - 1) as f64 * out[k - 2];
    }
}

/// `∫ x^k φ(x) dx`: zero for odd `k`, `(k−1)!!` otherwise.
pub fn gaussian_moment(k: usize) -> BigRational {
    BigRational::from_integer(gaussian_moment_int(k))
}

fn gaussian_moment_int(k: usize) -> BigInt {
    if k % 2 == 1 {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    let mut j = 1usize;
    while j < k {
        acc *= j;
        j += 2;
    }
    acc
}

/// `∫ p φ` as the exact sum of coefficients against Gaussian moments.
pub fn poly_gaussian_integral(p: &RatPoly) -> BigRational {
    p.coeffs
        .iter()
        .enumerate()
        .filter(|(k, c)| k % 2 == 0 && !c.is_zero())
        .map(|(k, c)| c * gaussian_moment(k))
        .fold(BigRational::zero(), |a, b| a + b)
}

/// Precomputed Gaussian moments up to a fixed degree.
#[derive(Clone, Debug)]
pub struct GaussMomentTable {
    entries: Vec<BigInt>,
}

impl Default for GaussMomentTable {
    fn default() -> Self {
        Self::new(DEFAULT_K_MAX)
    }
}

impl GaussMomentTable {
    pub fn new(k_max: usize) -> Self {
        Self { entries: (0..=k_max).map(gaussian_moment_int).collect() }
    }

    pub fn k_max(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn get(&self, k: usize) -> Option<&BigInt> {
        self.entries.get(k)
    }

    /// Table-backed [`poly_gaussian_integral`]; fails past `k_max`.
    pub fn integrate(&self, p: &RatPoly) -> Result<BigRational> {
        if let Some(d) = p.degree() {
            if d > self.k_max() {
                return Err(Error::Precondition(format!(
                    "polynomial degree {d} exceeds Gaussian moment table size {}",
                    self.k_max()
                )));
            }
        }
        let mut acc = BigRational::zero();
        for (k, c) in p.coeffs.iter().enumerate() {
            if k % 2 == 0 && !c.is_zero() {
                acc += c * &self.entries[k];
            }
        }
        Ok(acc)
    }
}

/// Coefficients of `x^k = Σ_j k!/((k−2j)! j! 2^j) H_{k−2j}(x)`, listed as
/// `(k − 2j, coefficient)` for `j = 0, 1, …`.
pub fn monomial_to_hermite(k: usize) -> Vec<(usize, BigRational)> {
    let mut out = Vec::with_capacity(k / 2 + 1);
    // c_0 = 1; c_{j+1} = c_j (k−2j)(k−2j−1) / (2(j+1))
    let mut c = BigInt::one();
    for j in 0..=k / 2 {
        out.push((k - 2 * j, BigRational::from_integer(c.clone())));
        if 2 * j + 2 <= k {
            c = c * BigInt::from((k - 2 * j) * (k - 2 * j - 1)) / BigInt::from(2 * (j + 1));
        }
    }
    out
}
