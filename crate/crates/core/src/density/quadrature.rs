//! Quadrature weights for integrands that are smooth on `[a, b]` and vanish
//! outside it, laid on a uniform grid whose nodes need not hit `a` or `b`.
//!
//! Inside the support the rule is trapezoid plus Gregory end corrections; the
//! two partial cells between `a`, `b` and the nearest node are integrated from
//! the Lagrange interpolant through the adjacent nodes. Both pieces are exact
//! for polynomials of degree below [`ORDER`].

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::GridSpec;
use crate::{Error, Result};

pub const ORDER: usize = 8;

/// Bernoulli numbers `B_2, B_4, B_6, B_8`.
const BERNOULLI: [(i64, i64); 4] = [(1, 6), (-1, 30), (1, 42), (-1, 30)];

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Solves `Σ_j w_j j^p = rhs[p]` for `p < ORDER` exactly.
fn solve_vandermonde(rhs: Vec<BigRational>) -> Vec<BigRational> {
    let m = rhs.len();
    let mut a: Vec<Vec<BigRational>> = (0..m)
        .map(|p| {
            let mut row: Vec<BigRational> = (0..m)
                .map(|j| BigRational::from_integer(BigInt::from(j).pow(p as u32)))
                .collect();
            row.push(rhs[p].clone());
            row
        })
        .collect();
    for col in 0..m {
        let piv = (col..m).find(|&r| !a[r][col].is_zero()).expect("Vandermonde is nonsingular");
        a.swap(col, piv);
        let inv = BigRational::one() / &a[col][col];
        for v in a[col].iter_mut() {
            *v *= &inv;
        }
        for r in 0..m {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in col..=m {
                    let d = &f * &a[col][c];
                    a[r][c] -= d;
                }
            }
        }
    }
    a.into_iter().map(|row| row[m].clone()).collect()
}

/// Gregory end corrections on unit spacing, applied to nodes `0..ORDER` from
/// either end of the panel.
fn gregory_corrections() -> Vec<f64> {
    let mut c = vec![BigRational::zero(); ORDER];
    let mut fact = BigRational::one(); // (2k)!
    for (k, &(bn, bd)) in BERNOULLI.iter().enumerate() {
        let order = 2 * k + 1;
        fact *= BigRational::from_integer(BigInt::from((2 * k + 1) * (2 * k + 2)));
        if order >= ORDER {
            break;
        }
        // one-sided weights for the order-th derivative at 0
        let mut rhs = vec![BigRational::zero(); ORDER];
        rhs[order] = (1..=order).map(|v| rat(v as i64, 1)).product();
        let d = solve_vandermonde(rhs);
        let b = rat(bn, bd) / &fact;
        for j in 0..ORDER {
            c[j] += &b * &d[j];
        }
    }
    c.iter().map(|v| v.to_f64().unwrap()).collect()
}

/// Weights of `∫_{−δ}^{0}` from the interpolant through nodes `0..ORDER`.
fn partial_cell(delta: f64) -> Vec<f64> {
    if delta <= 0.0 {
        return vec![0.0; ORDER];
    }
    let d = BigRational::from_float(delta).expect("finite cell width");
    let rhs: Vec<BigRational> = (0..ORDER)
        .map(|p| {
            let v = d.pow(p as i32 + 1) / rat(p as i64 + 1, 1);
            if p % 2 == 1 { -v } else { v }
        })
        .collect();
    solve_vandermonde(rhs).iter().map(|v| v.to_f64().unwrap()).collect()
}

/// Node weights for `∫_a^b g` where `g` is smooth on `[a, b]`; nodes outside get 0.
pub fn support_weights(spec: &GridSpec, a: f64, b: f64) -> Result<Vec<f64>> {
    let (l, h, n) = (spec.half_width(), spec.spacing(), spec.points());
    if !(a < b) || a < -l || b > l {
        return Err(Error::Precondition(format!("support [{a}, {b}] does not fit the grid")));
    }
    let i0 = ((a + l) / h - 1e-9).ceil().max(0.0) as usize;
    let i1 = (((b + l) / h + 1e-9).floor() as usize).min(n - 1);
    if i1 < i0 + 2 * ORDER {
        return Err(Error::Precondition(format!(
            "support [{a}, {b}] covers too few grid nodes; increase the point count"
        )));
    }
    let mut w = vec![0.0; n];
    for v in &mut w[i0..=i1] {
        *v = h;
    }
    w[i0] -= 0.5 * h;
    w[i1] -= 0.5 * h;
    for (j, c) in gregory_corrections().into_iter().enumerate() {
        w[i0 + j] += h * c;
        w[i1 - j] += h * c;
    }
    let left = ((spec.node(i0) - a) / h).abs();
    for (j, c) in partial_cell(left).into_iter().enumerate() {
        w[i0 + j] += h * c;
    }
    let right = ((b - spec.node(i1)) / h).abs();
    for (j, c) in partial_cell(right).into_iter().enumerate() {
        w[i1 - j] += h * c;
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Signed;

    #[test]
    fn gregory_first_coefficient() {
        // the endpoint weight drops below the trapezoid 1/2 but stays positive
        let c = gregory_corrections();
        assert!(c[0] < 0.0 && c[0] > -0.5, "{c:?}");
        let total: f64 = c.iter().sum();
        assert!(total.abs() < 1e-15);
    }

    #[test]
    fn exact_for_low_degree() {
        let spec = GridSpec::new(4.0, 1 << 10).unwrap();
        let (a, b) = (-3f64.sqrt(), 3f64.sqrt());
        let w = support_weights(&spec, a, b).unwrap();
        for p in 0..ORDER as i32 {
            let got: f64 = w.iter().enumerate().map(|(i, wi)| wi * spec.node(i).powi(p)).sum();
            let want = (b.powi(p + 1) - a.powi(p + 1)) / (p + 1) as f64;
            assert!((got - want).abs() < 1e-13, "degree {p}: {got} vs {want}");
        }
        // smooth non-polynomial integrand converges at high order
        let got: f64 = w.iter().enumerate().map(|(i, wi)| wi * spec.node(i).cos()).sum();
        assert!((got - 2.0 * b.sin()).abs() < 1e-14);
    }

    #[test]
    fn asymmetric_support() {
        let spec = GridSpec::new(5.0, 1 << 11).unwrap();
        let w = support_weights(&spec, -0.3, 2.71).unwrap();
        let got: f64 = w.iter().enumerate().map(|(i, wi)| wi * spec.node(i).exp()).sum();
        assert!((got - (2.71f64.exp() - (-0.3f64).exp())).abs() < 1e-13);
        assert!(support_weights(&spec, -6.0, 1.0).is_err());
    }

    #[test]
    fn vandermonde_small() {
        let s = solve_vandermonde(vec![rat(2, 1), rat(2, 1)]);
        // w0 + w1 = 2, w1 = 2 → (0, 2)
        assert_eq!(s, vec![rat(0, 1), rat(2, 1)]);
        assert!(s[1].is_positive());
    }
}
