//! Convergence experiments over `n`: measured divergences of `Z_n` next to the
//! Edgeworth predictions, rate fits and the local limit ratio.

use rayon::prelude::*;
use serde::Serialize;

use crate::attraction::{classify, conjugate_index, AttractionStatus};
use crate::density::{zn_density, Family, GridDensity, GridSpec};
use crate::divergence::{chi2, std_normal_pdf, tsallis};
use crate::edgeworth::{a_s_constant, predict_tsallis, truncated_integral, truncated_lower_bound};
use crate::{Error, Result};

/// Largest half-width tried when the tails refuse to settle.
pub const MAX_HALF_WIDTH: f64 = 64.0;

/// `φ^{1/β}` below this is left out of the local limit supremum.
pub const UNDERFLOW_GUARD: f64 = 1e-280;

pub const DEFAULT_N_LIST: [usize; 6] = [8, 16, 32, 64, 128, 256];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub talpha: f64,
    pub chi2: f64,
    pub pred_s3: f64,
    pub pred_s4: f64,
    pub lower_bound: f64,
    pub trunc_bound: f64,
    /// Half-width of the grid the row was finally measured on.
    pub half_width: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub exponent: f64,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub family: String,
    pub alpha: f64,
    pub s: usize,
    /// `None` when the law admits no classification (sampled input).
    pub status: Option<AttractionStatus>,
    pub rows: Vec<SweepRow>,
    /// Fit of `talpha` against `n`, when every value is positive and finite.
    pub fit: Option<RateFit>,
    pub chi2_fit: Option<RateFit>,
}

impl SweepReport {
    pub const CSV_HEADER: &'static str = "n,talpha,chi2,pred_s3,pred_s4,lower_bound,trunc_bound";
}

/// Least squares of `log v` on `log n`: `v ≈ amplitude · n^{exponent}`.
pub fn fit_rate(n_list: &[usize], values: &[f64]) -> Result<RateFit> {
    if n_list.len() != values.len() {
        return Err(Error::InvalidParameter(format!(
            "{} abscissae but {} values",
            n_list.len(),
            values.len()
        )));
    }
    if n_list.len() < 3 {
        return Err(Error::InvalidParameter("a rate fit needs at least three points".into()));
    }
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NonPositive { index, value });
    }
    let xs: Vec<f64> = n_list.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let exponent = sxy / sxx;
    Ok(RateFit { exponent, amplitude: (my - exponent * mx).exp() })
}

struct Measured {
    density: GridDensity,
    talpha: f64,
    chi2: f64,
    trunc_bound: f64,
}

/// Measures on `spec`, doubling the window while the tails have not settled.
fn measure(f: &Family, n: usize, alpha: f64, spec: &GridSpec, diverging: bool) -> Result<Measured> {
    let mut spec = *spec;
    loop {
        let density = zn_density(f, n, &spec)?;
        let t = tsallis(&density, alpha);
        let c = chi2(&density);
        let last = spec.half_width() * 2.0 > MAX_HALF_WIDTH;
        match (t, c) {
            (Ok(t), Ok(c)) => {
                return Ok(Measured { density, talpha: t.value, chi2: c.value, trunc_bound: t.truncation_error_bound })
            }
            (Err(Error::Diverged { .. }), _) | (_, Err(Error::Diverged { .. })) if !last => {
                spec = spec.doubled();
            }
            (Ok(t), Err(Error::Diverged { .. })) => {
                return Ok(Measured {
                    density,
                    talpha: t.value,
                    chi2: f64::INFINITY,
                    trunc_bound: t.truncation_error_bound,
                })
            }
            (Err(Error::Diverged { .. }), c) if diverging => {
                let chi2 = match c {
                    Ok(c) => c.value,
                    Err(Error::Diverged { .. }) => f64::INFINITY,
                    Err(e) => return Err(e),
                };
                return Ok(Measured { density, talpha: f64::INFINITY, chi2, trunc_bound: f64::INFINITY });
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    }
}

pub fn sweep(f: &Family, alpha: f64, n_list: &[usize], s: usize) -> Result<SweepReport> {
    sweep_on(f, alpha, n_list, s, &GridSpec::default())
}

pub fn sweep_on(f: &Family, alpha: f64, n_list: &[usize], s: usize, spec: &GridSpec) -> Result<SweepReport> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must exceed 1")));
    }
    if s < 3 {
        return Err(Error::InvalidParameter(format!("order s = {s} must be at least 3")));
    }
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(Error::InvalidParameter("n list must be nonempty and positive".into()));
    }
    let status = match classify(f, alpha) {
        Ok(v) => Some(v.status),
        Err(Error::Inconclusive(_)) => None,
        Err(e) => return Err(e),
    };
    let diverging = status == Some(AttractionStatus::Fails);
    let gamma = f.cumulants(5)?;

    let rows = n_list
        .par_iter()
        .map(|&n| {
            let m = measure(f, n, alpha, spec, diverging)?;
            let lower_bound = truncated_lower_bound(truncated_integral(&m.density, s, alpha, n)?, alpha);
            Ok(SweepRow {
                n,
                talpha: m.talpha,
                chi2: m.chi2,
                pred_s3: predict_tsallis(n, 3, alpha, &gamma)?,
                pred_s4: predict_tsallis(n, 4, alpha, &gamma)?,
                lower_bound,
                trunc_bound: m.trunc_bound,
                half_width: m.density.spec().half_width(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let fit_of = |vals: Vec<f64>| {
        if vals.iter().all(|v| v.is_finite()) {
            fit_rate(n_list, &vals).ok()
        } else {
            None
        }
    };
    Ok(SweepReport {
        family: f.to_string(),
        alpha,
        s,
        status,
        fit: fit_of(rows.iter().map(|r| r.talpha).collect()),
        chi2_fit: fit_of(rows.iter().map(|r| r.chi2).collect()),
        rows,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LocalLimit {
    /// `sup |p_n − φ| / φ^{1/β}` over the guarded grid.
    pub sup: f64,
    /// `a_s |γ_s| / s! · n^{−(s−2)/2}`.
    pub predicted: f64,
    pub ratio: f64,
    /// Where the supremum is attained.
    pub argmax: f64,
}

pub fn local_limit(f: &Family, n: usize, alpha: f64, s: usize) -> Result<LocalLimit> {
    local_limit_on(f, n, alpha, s, &GridSpec::default())
}

pub fn local_limit_on(f: &Family, n: usize, alpha: f64, s: usize, spec: &GridSpec) -> Result<LocalLimit> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must exceed 1")));
    }
    if s < 3 {
        return Err(Error::InvalidParameter(format!("order s = {s} must be at least 3")));
    }
    let beta = conjugate_index(alpha);
    let d = zn_density(f, n, spec)?;
    let (mut sup, mut argmax) = (0.0, 0.0);
    for (m, &p) in d.values().iter().enumerate() {
        let x = spec.node(m);
        let phi = std_normal_pdf(x);
        let w = phi.powf(1.0 / beta);
        if w < UNDERFLOW_GUARD {
            continue;
        }
        let r = (p - phi).abs() / w;
        if r > sup {
            sup = r;
            argmax = x;
        }
    }
    let gamma_s = f.cumulants(s)?.get(s);
    let fact: f64 = (1..=s).map(|k| k as f64).product();
    let predicted = a_s_constant(s, alpha) * gamma_s.abs() / fact * (n as f64).powf(-0.5 * (s as f64 - 2.0));
    let ratio = if predicted > 0.0 {
        sup / predicted
    } else if sup <= 1e-10 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(LocalLimit { sup, predicted, ratio, argmax })
}

/// Ratio of the measured supremum to its predicted main term.
pub fn local_limit_ratio(f: &Family, n: usize, alpha: f64, s: usize) -> Result<f64> {
    local_limit(f, n, alpha, s).map(|l| l.ratio)
}
