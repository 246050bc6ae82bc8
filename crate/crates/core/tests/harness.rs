use renyi_clt::density::{materialize, zn_density, Family, GridSpec};
use renyi_clt::divergence::{d_from_t, renyi};
use renyi_clt::harness::*;
use renyi_clt::Error;

#[test]
fn lower_bound_never_exceeds_the_measurement() {
    for f in [
        Family::Uniform,
        Family::mixture(&[(0.7, 0.5), (1.3, 0.5)]).unwrap(),
        Family::bernoulli_gaussian_standardized(0.2, 0.8).unwrap(),
    ] {
        for alpha in [1.5, 2.0, 3.0] {
            let r = sweep(&f, alpha, &[4, 16, 64, 256], 4).unwrap();
            for row in &r.rows {
                assert!(row.talpha >= row.lower_bound - 1e-9, "{f} alpha={alpha} n={}", row.n);
                assert!(row.talpha.is_finite() && row.chi2.is_finite());
                assert!(row.trunc_bound >= 0.0);
            }
        }
    }
}

#[test]
fn renyi_grows_at_most_linearly() {
    let spec = GridSpec::new(32.0, 1 << 15).unwrap();
    for f in [Family::Uniform, Family::bernoulli_gaussian_standardized(0.5, 1.2).unwrap()] {
        for alpha in [1.5, 2.0] {
            let d1 = renyi(&materialize(&f, &spec).unwrap(), alpha).unwrap().value;
            let r = sweep(&f, alpha, &[2, 3, 4, 8], 4).unwrap();
            for row in &r.rows {
                assert!(d_from_t(row.talpha, alpha) <= row.n as f64 * d1 + 1e-9, "{f} n={}", row.n);
                let direct = renyi(&zn_density(&f, row.n, &GridSpec::default()).unwrap(), alpha).unwrap().value;
                assert!((d_from_t(row.talpha, alpha) - direct).abs() < 1e-9 * (1.0 + direct));
            }
        }
    }
}

#[test]
fn uniform_remainder_is_third_order() {
    let r = sweep(&Family::Uniform, 2.0, &DEFAULT_N_LIST, 4).unwrap();
    let scaled: Vec<f64> = r.rows.iter().map(|row| (row.talpha - row.pred_s4).abs() * (row.n as f64).powi(3)).collect();
    assert!(scaled.iter().all(|v| *v < 0.05), "{scaled:?}");
    for row in &r.rows {
        let n2 = (row.n * row.n) as f64;
        assert!((row.chi2 * n2 - 0.06).abs() < 0.2 / row.n as f64, "n={}", row.n);
        // the two integrands differ by twice the mass defect of the grid
        assert!((row.chi2 - row.talpha).abs() <= 1e-10, "n={}: {} vs {}", row.n, row.chi2, row.talpha);
    }
    let fit = r.fit.unwrap();
    assert!((fit.exponent + 2.0).abs() < 0.05);
    assert!((fit.amplitude - 0.06).abs() < 0.01);
}

#[test]
fn normal_family_stays_put() {
    let r = sweep(&Family::standard_normal(), 3.0, &[2, 8, 64], 4).unwrap();
    for row in &r.rows {
        assert!(row.chi2 <= 1e-10 && row.talpha.abs() <= 1e-10);
    }
}

#[test]
fn skewed_law_decays_like_one_over_n() {
    let (p, a) = (0.2, 0.8);
    let q = 1.0 - p;
    let g3 = a * a * a * p * q * (q - p);
    let target = g3 * g3 / 6.0;
    let f = Family::bernoulli_gaussian_standardized(p, a).unwrap();
    let r = sweep(&f, 2.0, &[16, 64, 256], 3).unwrap();
    for row in &r.rows {
        let scaled = row.n as f64 * row.chi2;
        assert!((scaled / target - 1.0).abs() < 0.05 / row.n as f64 + 1e-4, "n={}: {scaled} vs {target}", row.n);
    }
    assert!((r.chi2_fit.unwrap().exponent + 1.0).abs() < 0.01);
}

#[test]
fn mixture_rate() {
    let comps = [(0.7, 0.5), (1.3, 0.5)];
    let m: f64 = comps.iter().map(|(v, w)| w * v * v).sum();
    let f = Family::mixture(&comps).unwrap();
    let r = sweep(&f, 2.0, &[16, 32, 64, 128], 4).unwrap();
    let fit = r.chi2_fit.unwrap();
    assert!((fit.exponent + 2.0).abs() < 0.01);
    assert!((fit.amplitude / (3.0 * (m - 1.0).powi(2) / 8.0) - 1.0).abs() < 0.01);
}

#[test]
fn rate_fit_inputs() {
    let ns = [8, 16, 32];
    let v = [0.5 / 8.0, 0.5 / 16.0, 0.5 / 32.0];
    let fit = fit_rate(&ns, &v).unwrap();
    assert!((fit.exponent + 1.0).abs() < 1e-12 && (fit.amplitude - 0.5).abs() < 1e-12);
    assert!(matches!(fit_rate(&ns, &[1.0, -1.0, 1.0]), Err(Error::NonPositive { index: 1, .. })));
    assert!(fit_rate(&ns, &[1.0, 2.0]).is_err());
}

#[test]
fn local_limit_ratio_tends_to_one() {
    let mut prev = f64::INFINITY;
    for n in [32, 64, 128] {
        let l = local_limit(&Family::Uniform, n, 2.0, 4).unwrap();
        assert!((0.8..=1.2).contains(&l.ratio), "n={n}: {}", l.ratio);
        let dist = (l.ratio - 1.0).abs();
        assert!(dist < prev, "n={n}");
        prev = dist;
        assert!(l.argmax.abs() < 10.0);
    }
    assert!(local_limit(&Family::Uniform, 32, 1.0, 4).is_err());
}

#[test]
fn rejects_bad_sweeps() {
    assert!(sweep(&Family::Uniform, 1.0, &[4], 4).is_err());
    assert!(sweep(&Family::Uniform, 2.0, &[], 4).is_err());
    assert!(sweep(&Family::Uniform, 2.0, &[0, 4], 4).is_err());
    assert!(sweep(&Family::Uniform, 2.0, &[4], 2).is_err());
}
