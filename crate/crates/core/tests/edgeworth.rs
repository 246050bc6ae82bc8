mod common;

use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;
use renyi_clt::density::{materialize, zn_density, CumulantSet, Family, GridDensity, GridSpec};
use renyi_clt::divergence::{chi2, tsallis};
use renyi_clt::edgeworth::*;
use renyi_clt::hermite::hermite_eval;
use statrs::function::erf::erf;

fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn factorial(k: usize) -> BigRational {
    (1..=k as i64).fold(r(1, 1), |a, j| a * r(j, 1))
}

fn random_rational(rng: &mut rand_chacha::ChaCha8Rng) -> BigRational {
    r(rng.gen_range(-40..=40), rng.gen_range(1..=17))
}

#[test]
fn leading_coefficient_closed_form() {
    let mut rng = common::rng(41);
    for s in [3usize, 4, 5] {
        for alpha in [r(3, 2), r(2, 1), r(3, 1)] {
            for _ in 0..5 {
                // γ_3..γ_{s−1} vanish, everything from γ_s up to γ_{2s−3} is arbitrary
                let mut gammas = vec![BigRational::zero(); 2 * s - 5];
                for g in gammas.iter_mut().skip(s - 3) {
                    *g = random_rational(&mut rng);
                }
                let gs = gammas[s - 3].clone();
                let want = &alpha * (&alpha - r(1, 1)) * &gs * &gs / (r(2, 1) * factorial(s));
                assert_eq!(b_coefficient_exact(s - 2, &alpha, &gammas), want, "s={s} alpha={alpha}");
                for j in 1..s - 2 {
                    assert!(b_coefficient_exact(j, &alpha, &gammas).is_zero(), "s={s} j={j}");
                }
            }
        }
    }
}

#[test]
fn second_coefficient_ignores_fifth_cumulant() {
    let mut rng = common::rng(42);
    for alpha in [r(3, 2), r(2, 1), r(5, 2), r(3, 1)] {
        assert!(!b_coefficient_poly(2, &alpha).depends_on(5));
        assert!(b_coefficient_poly(2, &alpha).depends_on(4));
        for _ in 0..10 {
            let mut g: Vec<BigRational> = (0..3).map(|_| random_rational(&mut rng)).collect();
            let base = b_coefficient_exact(2, &alpha, &g);
            g[2] = &g[2] + random_rational(&mut rng) + r(1, 3);
            assert_eq!(b_coefficient_exact(2, &alpha, &g), base);
        }
    }
    // b_3 does see γ_5
    assert!(b_coefficient_poly(3, &r(2, 1)).depends_on(5));
}

#[test]
fn known_values() {
    let g = CumulantSet::new(vec![1.0, 0.0, 0.0]);
    assert!((b_coefficient(1, 2.0, &g).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    // Uniform: γ_4 = −6/5 gives χ² ≈ 3/(50 n²)
    let u = Family::Uniform.cumulants(5).unwrap();
    let b2 = b_coefficient(2, 2.0, &u).unwrap();
    assert!((b2 - 0.06).abs() < 1e-14);
    for n in [4, 64] {
        let want = 0.06 / (n * n) as f64;
        assert!((predict_tsallis(n, 4, 2.0, &u).unwrap() - want).abs() < 1e-15);
    }
    // mixture: 3(m − 1)²/(8 n²), m = Σ w σ⁴
    let comps = [(0.5, 0.5), (1.5, 0.5)];
    let f = Family::mixture(&comps).unwrap();
    let m: f64 = comps.iter().map(|(v, w)| w * v * v).sum();
    let pred = predict_tsallis(10, 4, 2.0, &f.cumulants(5).unwrap()).unwrap();
    assert!((pred - 3.0 * (m - 1.0).powi(2) / 800.0).abs() < 1e-14);
    // nothing to expand for the normal law
    let z = CumulantSet::zero(9);
    for j in 1..=3 {
        assert_eq!(b_coefficient(j, 2.5, &z).unwrap(), 0.0);
    }
    assert!(b_coefficient(2, 2.0, &CumulantSet::new(vec![0.0, 0.1])).is_err());
}

#[test]
fn odd_products_vanish() {
    let mut rng = common::rng(43);
    let mut tuples: Vec<Vec<usize>> = Vec::new();
    for a in 1..=6 {
        tuples.push(vec![a]);
        for b in a..=6 {
            tuples.push(vec![a, b]);
            for c in b..=6 {
                tuples.push(vec![a, b, c]);
            }
        }
    }
    let gamma: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
    for t in tuples {
        let p = edgeworth_product_integral(&t);
        let odd = t.iter().sum::<usize>() % 2 == 1;
        if odd {
            assert!(p.is_zero(), "{t:?}");
        }
        // the vanishing is structural, so any cumulants agree with it
        let v: f64 = p.eval(|k| if k >= 3 { gamma[k - 3] } else { 0.0 });
        if odd {
            assert_eq!(v, 0.0);
        }
    }
}

#[test]
fn edgeworth_polynomials() {
    let mut rng = common::rng(44);
    for nu in 1..=6 {
        let sym = edgeworth_poly_symbolic(nu);
        assert_eq!(*sym.keys().max().unwrap(), 3 * nu);
        assert!(sym.keys().all(|k| k % 2 == nu % 2 && *k >= nu + 2));
    }
    let gamma = CumulantSet::new((0..6).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let set = q_polys(&gamma, 6).unwrap();
    for nu in 1..=6 {
        assert_eq!(set.degree(nu), 3 * nu);
    }
    let g3 = gamma.get(3);
    assert!((set.eval_q(1, 1.3) - g3 / 6.0 * hermite_eval(3, 1.3)).abs() < 1e-14);
    let g4 = gamma.get(4);
    let q2 = g4 / 24.0 * hermite_eval(4, 0.7) + g3 * g3 / 72.0 * hermite_eval(6, 0.7);
    assert!((set.eval_q(2, 0.7) - q2).abs() < 1e-14);
    assert!(q_polys(&gamma, 7).is_err());

    let sym = CumulantSet::new(vec![0.0, -1.2, 0.0]);
    let x = 0.9;
    let want = common::phi(x) * (1.0 - 0.05 * hermite_eval(4, x) / 16.0);
    assert!((edgeworth_density(x, 16, 4, &sym).unwrap() - want).abs() < 1e-15);
    assert_eq!(edgeworth_density(x, 5, 6, &CumulantSet::zero(8)).unwrap(), common::phi(x));
}

#[test]
fn edgeworth_density_tracks_uniform_sums() {
    let spec = GridSpec::default();
    let f = Family::Uniform;
    let g = f.cumulants(8).unwrap();
    let mut prev = f64::INFINITY;
    for n in [8, 32, 128] {
        let d = zn_density(&f, n, &spec).unwrap();
        let err = (0..spec.points())
            .filter(|&m| spec.node(m).abs() < 4.0)
            .map(|m| (d.values()[m] - edgeworth_density(spec.node(m), n, 4, &g).unwrap()).abs())
            .fold(0.0, f64::max);
        assert!(err < prev / 3.0, "n={n}: {err}");
        prev = err;
    }
}

fn brute_a_s(s: usize, alpha: f64) -> f64 {
    let hi = 2.0 * s as f64 + 10.0;
    let steps = (2.0 * hi / 1e-4) as usize;
    (0..=steps)
        .map(|i| {
            let x = -hi + i as f64 * 1e-4;
            common::phi(x).powf(1.0 / alpha) * hermite_eval(s, x).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn local_limit_constant() {
    let s1 = (2.0 * std::f64::consts::PI).powf(-0.25) * (-0.5f64).exp() * 2f64.sqrt();
    assert!((a_s_constant(1, 2.0) / s1 - 1.0).abs() < 1e-12);
    for s in [2, 3, 4, 6] {
        for alpha in [1.5, 2.0, 4.0] {
            let a = a_s_constant(s, alpha);
            let b = brute_a_s(s, alpha);
            assert!(a >= b * (1.0 - 1e-12), "s={s} alpha={alpha}");
            assert!((a - b) / a < 1e-8, "s={s} alpha={alpha}: {a} vs {b}");
        }
    }
}

#[test]
fn truncated_integral_of_the_normal() {
    let spec = GridSpec::default();
    let d = materialize(&Family::standard_normal(), &spec).unwrap();
    for (n, s) in [(8, 3), (64, 4), (256, 5)] {
        let m = truncation_point(n, s);
        assert!((m - (2.0 * (s - 1) as f64 * (n as f64).ln()).sqrt()).abs() < 1e-15);
        let want = erf(m / 2f64.sqrt());
        // trapezoid end correction h²/12 · |f'(M) − f'(−M)|, doubled
        let h = spec.spacing();
        let tol = h * h * m * common::phi(m) / 3.0 + 1e-13;
        for alpha in [1.5, 2.0, 3.0] {
            let got = truncated_integral(&d, s, alpha, n).unwrap();
            assert!((got - want).abs() < tol, "n={n} s={s}: {got} vs {want}");
        }
    }
    let spec = GridSpec::new(4.0, 1024).unwrap();
    let narrow = GridDensity::new(spec, spec.nodes().into_iter().map(common::phi).collect()).unwrap();
    assert!(truncated_integral(&narrow, 4, 2.0, 64).is_err());
}

#[test]
fn truncated_bound_sits_below_the_divergence() {
    let spec = GridSpec::new(32.0, 1 << 15).unwrap();
    let d = zn_density(&Family::Uniform, 64, &spec).unwrap();
    let i = truncated_integral(&d, 4, 2.0, 64).unwrap();
    assert!(i - 1.0 <= chi2(&d).unwrap().value + 1e-9);
    for alpha in [1.5, 3.0] {
        let lb = truncated_lower_bound(truncated_integral(&d, 4, alpha, 64).unwrap(), alpha);
        assert!(lb <= tsallis(&d, alpha).unwrap().value + 1e-12);
    }
}
