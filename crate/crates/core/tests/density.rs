mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use renyi_clt::density::*;

fn families() -> Vec<Family> {
    vec![
        Family::Uniform,
        Family::standard_normal(),
        Family::mixture(&[(0.7, 0.5), (1.3, 0.5)]).unwrap(),
        Family::bernoulli_gaussian_standardized(0.2, 0.8).unwrap(),
        Family::bernoulli_gaussian_standardized(0.5, 1.2).unwrap(),
        Family::exp_series(vec![1.0, 0.0, 0.3]).unwrap(),
        Family::exp_series(vec![1.0, 0.0, 0.2, 0.05]).unwrap(),
    ]
}

const NS: [usize; 9] = [1, 2, 3, 4, 8, 16, 32, 128, 256];

fn sample_cf(d: &GridDensity, t: f64) -> Complex64 {
    let spec = d.spec();
    (0..spec.points())
        .map(|m| Complex64::from_polar(d.weights()[m] * d.values()[m], t * spec.node(m)))
        .sum()
}

#[test]
fn mass_and_variance_are_preserved() {
    let spec = GridSpec::default();
    for f in families() {
        for n in NS {
            let d = zn_density(&f, n, &spec).unwrap();
            let budget = if n == 1 { TAIL_TOL } else { SUM_MASS_TOL };
            assert!((d.mass() - 1.0).abs() <= budget, "{f} n={n}: mass {}", d.mass());
            assert!((d.moment(2) - 1.0).abs() < 1e-6, "{f} n={n}: variance {}", d.moment(2));
            assert!(d.moment(1).abs() < 1e-9, "{f} n={n}");
        }
    }
}

#[test]
fn characteristic_functions_agree() {
    let spec = GridSpec::default();
    for f in families() {
        let d = materialize(&f, &spec).unwrap();
        for k in -100..=100 {
            let t = k as f64 / 10.0;
            let (got, want) = (sample_cf(&d, t), f.cf(t));
            assert!((got - want).norm() < 1e-8, "{f} t={t}: {got} vs {want}");
        }
        // the powered transform survives the inversion
        let d = zn_density(&f, 8, &spec).unwrap();
        for k in -100..=100 {
            let t = k as f64 / 10.0;
            let want = f.cf(t / 8f64.sqrt()).powu(8);
            assert!((sample_cf(&d, t) - want).norm() < 1e-6, "{f} n=8 t={t}");
        }
    }
}

#[test]
fn cumulants_scale_with_n() {
    // fine spacing: the Uniform kinks cost O(h²) in every moment
    let spec = GridSpec::new(16.0, 1 << 16).unwrap();
    for f in families() {
        let g = f.cumulants(6).unwrap();
        for n in [2, 4, 16, 64] {
            let d = zn_density(&f, n, &spec).unwrap();
            let mu: Vec<f64> = (0..=6).map(|k| d.moment(k)).collect();
            let kappa = cumulants_from_moments(&mu);
            let want = g.for_sum(n);
            for k in 3..=6 {
                let got = kappa[k - 1] / kappa[1].powf(k as f64 / 2.0);
                let oracle = g.get(k) / (n as f64).powf((k as f64 - 2.0) / 2.0);
                assert!((want.get(k) - oracle).abs() < 1e-15);
                assert!((got - oracle).abs() < 1e-6, "{f} n={n} k={k}: {got} vs {oracle}");
            }
        }
    }
}

#[test]
fn two_uniforms_make_a_triangle() {
    // (U1 + U2)/√2 has density (√6 − |x|)/6 on |x| ≤ √6
    let s6 = 6f64.sqrt();
    let spec = GridSpec::default();
    let d = zn_density(&Family::Uniform, 2, &spec).unwrap();
    // the transform (sin(s)/s)², s = t√(3/2), is cut at π/h
    let t_max = std::f64::consts::PI / spec.spacing();
    let cut = 2.0 / (3.0 * std::f64::consts::PI * t_max);
    let mut worst: f64 = 0.0;
    for m in 0..spec.points() {
        let x = spec.node(m);
        let want = ((s6 - x.abs()) / 6.0).max(0.0);
        worst = worst.max((d.values()[m] - want).abs());
        if (x.abs() - s6).abs() > 0.05 && x.abs() > 0.05 {
            assert!((d.values()[m] - want).abs() < 1e-5, "x={x}: {} vs {want}", d.values()[m]);
        }
    }
    assert!(worst <= cut, "{worst} > {cut}");
}

#[test]
fn closed_form_cumulants() {
    let u = Family::Uniform.cumulants(6).unwrap();
    assert!(u.get(3).abs() < 1e-12);
    assert!((u.get(4) + 1.2).abs() < 1e-12);
    assert!(u.get(5).abs() < 1e-12);
    assert!((u.get(6) - 48.0 / 7.0).abs() < 1e-10);
    // two-point skewness (q − p)/√(pq) carried by a³
    let (p, a) = (0.2, 0.8);
    let bg = Family::bernoulli_gaussian_standardized(p, a).unwrap().cumulants(4).unwrap();
    let q = 1.0 - p;
    assert!((bg.get(3) - a.powi(3) * p * q * (q - p)).abs() < 1e-12);
    assert!((bg.get(4) - a.powi(4) * p * q * (1.0 - 6.0 * p * q)).abs() < 1e-12);
    assert!(Family::mixture(&[(2.0, 1.0)]).unwrap().cumulants(4).is_err());
}

#[test]
fn moment_cumulant_roundtrip() {
    let mut rng = common::rng(21);
    for _ in 0..100 {
        let kappa: Vec<f64> = (0..8).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mu = moments_from_cumulants(&kappa);
        assert_eq!(mu[0], 1.0);
        let back = cumulants_from_moments(&mu);
        for (a, b) in kappa.iter().zip(&back) {
            assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
        }
    }
}

#[test]
fn rejects_bad_parameters() {
    assert!(Family::mixture(&[]).is_err());
    assert!(Family::mixture(&[(1.0, 0.4), (1.0, 0.4)]).is_err());
    assert!(Family::mixture(&[(-1.0, 1.0)]).is_err());
    assert!(Family::bernoulli_gaussian(1.5, 1.0, 0.0).is_err());
    assert!(Family::bernoulli_gaussian_standardized(0.5, 3.0).is_err());
    assert!(GridSpec::new(16.0, 1000).is_err());
    assert!(GridSpec::new(0.0, 1024).is_err());
    assert!(zn_density(&Family::Uniform, 0, &GridSpec::default()).is_err());
}

#[test]
fn grid_nodes_are_symmetric() {
    let spec = GridSpec::new(8.0, 256).unwrap();
    assert_eq!(spec.node(0), -8.0);
    assert_eq!(spec.node(255), 8.0);
    for m in 0..256 {
        assert_eq!(spec.node(m), -spec.node(255 - m));
    }
    let d = spec.doubled();
    assert_eq!((d.half_width(), d.points()), (16.0, 512));
}

fn family_strategy() -> impl Strategy<Value = Family> {
    prop_oneof![
        Just(Family::Uniform),
        (0.3f64..0.9, 0.2f64..0.8).prop_map(|(v1, w)| {
            let v2 = (1.0 - w * v1) / (1.0 - w);
            Family::mixture(&[(v1, w), (v2, 1.0 - w)]).unwrap()
        }),
        (0.05f64..0.95, 0.1f64..1.0).prop_filter_map("variance", |(p, t)| {
            let amax = 1.0 / (p * (1.0 - p)).sqrt();
            Family::bernoulli_gaussian_standardized(p, t * amax * 0.99).ok()
        }),
        prop::collection::vec(-0.3f64..0.3, 1..4).prop_map(|tail| {
            let mut s = vec![1.0, 0.0];
            s.extend(tail);
            Family::exp_series(s).unwrap()
        }),
    ]
}

proptest! {
    #[test]
    fn display_roundtrips(f in family_strategy()) {
        let text = f.to_string();
        let back: Family = text.parse().unwrap();
        prop_assert_eq!(back.to_string(), text);
        match (&f, &back) {
            (Family::BernoulliGaussian { p, a, b }, Family::BernoulliGaussian { p: p2, a: a2, b: b2 }) => {
                prop_assert_eq!((p, a, b), (p2, a2, b2));
            }
            _ => prop_assert_eq!(&f, &back),
        }
    }
}
