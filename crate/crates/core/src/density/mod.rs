//! Densities on uniform symmetric grids, closed-form families, and the
//! density of the normalized sum `Z_n = (X_1 + … + X_n)/√n`.

mod family;
mod fourier;
pub mod quadrature;

use std::io::Read;

use serde::Serialize;

pub use family::{cumulants_from_moments, moments_from_cumulants, Family, MixtureComponent};
pub use fourier::{sum_density, zn_density, SumTerm, ALIAS_TOL, SUM_MASS_TOL};

use crate::{Error, Result};

/// Mass deficit tolerated before a grid is declared too narrow.
pub const TAIL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    half_width: f64,
    points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { half_width: 16.0, points: 1 << 14 }
    }
}

impl GridSpec {
    /// Nodes `x_m = −L + m h`, `h = 2L/(N − 1)`, `N` a power of two.
    pub fn new(half_width: f64, points: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "half-width {half_width} must be positive"
            )));
        }
        if !points.is_power_of_two() || points < 64 {
            return Err(Error::InvalidParameter(format!(
                "grid points {points} must be a power of two >= 64"
            )));
        }
        Ok(Self { half_width, points })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }

    pub fn node(&self, m: usize) -> f64 {
        // symmetric by construction: node(N−1−m) == −node(m)
        let h = self.spacing();
        if 2 * m < self.points {
            -self.half_width + m as f64 * h
        } else {
            self.half_width - (self.points - 1 - m) as f64 * h
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|m| self.node(m)).collect()
    }

    /// Twice the half-width at the same spacing.
    pub fn doubled(&self) -> Self {
        Self { half_width: 2.0 * self.half_width, points: 2 * self.points }
    }
}

/// Trapezoid weights over the whole grid.
pub fn trapezoid_weights(spec: &GridSpec) -> Vec<f64> {
    let h = spec.spacing();
    let mut w = vec![h; spec.points()];
    w[0] *= 0.5;
    w[spec.points() - 1] *= 0.5;
    w
}

/// Sampled density with its own quadrature weights.
///
/// Most densities use trapezoid weights. Densities with a jump at the edge of
/// a compact support carry corrected weights that integrate the smooth part
/// to high order; see [`quadrature::support_weights`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridDensity {
    spec: GridSpec,
    values: Vec<f64>,
    weights: Vec<f64>,
    /// Absolute accuracy of small values; zero when values carry relative accuracy.
    noise_floor: f64,
}

impl GridDensity {
    /// Trapezoid-weighted density with relative accuracy; rejects negative values.
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        let weights = trapezoid_weights(&spec);
        Self::with_weights(spec, values, weights, 0.0)
    }

    pub fn with_weights(
        spec: GridSpec,
        values: Vec<f64>,
        weights: Vec<f64>,
        noise_floor: f64,
    ) -> Result<Self> {
        if values.len() != spec.points() || weights.len() != spec.points() {
            return Err(Error::InvalidParameter(format!(
                "{} values for a {}-point grid",
                values.len(),
                spec.points()
            )));
        }
        if let Some((m, &v)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::NegativeDensity { x: spec.node(m), value: v });
        }
        Ok(Self { spec, values, weights, noise_floor })
    }

    /// Reads a two-column `x,p` CSV (header optional) on a symmetric
    /// power-of-two grid.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut xs = Vec::new();
        let mut ps = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Input(e.to_string()))?;
            if rec.len() != 2 {
                return Err(Error::Input(format!("row {}: expected 2 columns", line + 1)));
            }
            let (x, p) = match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(x), Ok(p)) => (x, p),
                _ if line == 0 => continue,
                _ => return Err(Error::Input(format!("row {}: not numeric", line + 1))),
            };
            xs.push(x);
            ps.push(p);
        }
        let n = xs.len();
        if n < 2 {
            return Err(Error::Input("grid has fewer than two rows".into()));
        }
        let l = -xs[0];
        let spec = GridSpec::new(l, n).map_err(|e| Error::Input(e.to_string()))?;
        let h = spec.spacing();
        for (m, &x) in xs.iter().enumerate() {
            if (x - spec.node(m)).abs() > 1e-6 * h {
                return Err(Error::Input(format!(
                    "row {}: x = {x} is off the symmetric uniform grid (expected {})",
                    m + 1,
                    spec.node(m)
                )));
            }
        }
        let max = ps.iter().copied().fold(0.0, f64::max);
        let d = Self::with_weights(spec, ps, trapezoid_weights(&spec), 1e-15 * max)?;
        let mass = d.mass();
        if (mass - 1.0).abs() > 1e-6 {
            return Err(Error::Input(format!("grid density integrates to {mass}, not 1")));
        }
        Ok(d)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn noise_floor(&self) -> f64 {
        self.noise_floor
    }

    pub fn x(&self, m: usize) -> f64 {
        self.spec.node(m)
    }

    /// `Σ w_m g(x_m, p_m)`.
    pub fn integrate(&self, g: impl Fn(f64, f64) -> f64) -> f64 {
        self.values
            .iter()
            .zip(&self.weights)
            .enumerate()
            .map(|(m, (&p, &w))| if w == 0.0 { 0.0 } else { w * g(self.spec.node(m), p) })
            .sum()
    }

    pub fn mass(&self) -> f64 {
        self.integrate(|_, p| p)
    }

    /// `∫ x^k p(x) dx` by the grid quadrature.
    pub fn moment(&self, k: usize) -> f64 {
        self.integrate(|x, p| x.powi(k as i32) * p)
    }

    /// Cumulants `γ_3..=γ_K` from grid moments; the density must be standardized.
    pub fn cumulants(&self, k_max: usize) -> Result<CumulantSet> {
        let mu: Vec<f64> = (0..=k_max.max(2)).map(|k| self.moment(k)).collect();
        let mean = mu[1] / mu[0];
        let variance = mu[2] / mu[0] - mean * mean;
        if mean.abs() > 1e-8 || (variance - 1.0).abs() > 1e-8 {
            return Err(Error::NotStandardized { mean, variance });
        }
        let mut kappa = cumulants_from_moments(&mu[..=k_max.max(2)]);
        kappa.truncate(k_max);
        Ok(CumulantSet::new(kappa.into_iter().skip(2).collect()))
    }
}

/// Free-function form of [`GridDensity::moment`].
pub fn moment(d: &GridDensity, k: usize) -> f64 {
    d.moment(k)
}

/// Free-function form of [`GridDensity::cumulants`].
pub fn cumulants(d: &GridDensity, k_max: usize) -> Result<CumulantSet> {
    d.cumulants(k_max)
}

/// Cumulants `γ_3, γ_4, …` of a standardized law.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CumulantSet {
    gammas: Vec<f64>,
}

impl CumulantSet {
    /// `gammas[0]` is `γ_3`.
    pub fn new(gammas: Vec<f64>) -> Self {
        Self { gammas }
    }

    pub fn zero(k_max: usize) -> Self {
        Self { gammas: vec![0.0; k_max.saturating_sub(2)] }
    }

    /// Highest order supplied.
    pub fn max_order(&self) -> usize {
        self.gammas.len() + 2
    }

    /// `γ_k`, with `γ_1 = 0` and `γ_2 = 1`. Past [`Self::max_order`] this is 0.
    pub fn get(&self, k: usize) -> f64 {
        match k {
            0 | 1 => 0.0,
            2 => 1.0,
            _ => self.gammas.get(k - 3).copied().unwrap_or(0.0),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.gammas
    }

    /// Cumulants of `Z_n`: `γ_k / n^{(k−2)/2}`.
    pub fn for_sum(&self, n: usize) -> Self {
        let n = n as f64;
        Self {
            gammas: self
                .gammas
                .iter()
                .enumerate()
                .map(|(i, g)| g / n.powf((i + 1) as f64 / 2.0))
                .collect(),
        }
    }
}

/// Samples a family on the grid.
///
/// The uniform law carries support-corrected weights. A sampled grid family
/// is returned as stored, whatever `spec` says.
pub fn materialize(f: &Family, spec: &GridSpec) -> Result<GridDensity> {
    match f {
        Family::CustomGrid(d) => Ok((**d).clone()),
        Family::Uniform => {
            let s3 = 3f64.sqrt();
            let weights = quadrature::support_weights(spec, -s3, s3)?;
            let c = 0.5 / s3;
            let values = weights.iter().map(|&w| if w != 0.0 { c } else { 0.0 }).collect();
            GridDensity::with_weights(*spec, values, weights, 0.0)
        }
        _ => {
            let mut values = Vec::with_capacity(spec.points());
            for m in 0..spec.points() {
                let x = spec.node(m);
                let v = f.pdf(x).expect("closed-form family");
                if v < -1e-12 {
                    return Err(Error::NegativeDensity { x, value: v });
                }
                values.push(v.max(0.0));
            }
            let d = GridDensity::new(*spec, values)?;
            let mass = d.mass();
            if (mass - 1.0).abs() > TAIL_TOL {
                return Err(Error::TailMass { mass: (1.0 - mass).abs(), budget: TAIL_TOL });
            }
            Ok(d)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_is_symmetric() {
        let s = GridSpec::default();
        assert_eq!(s.node(0), -16.0);
        assert_eq!(s.node(s.points() - 1), 16.0);
        for m in 0..s.points() {
            assert_eq!(s.node(m), -s.node(s.points() - 1 - m));
        }
        assert!(GridSpec::new(4.0, 1000).is_err());
        assert!(GridSpec::new(-1.0, 1024).is_err());
    }

    #[test]
    fn uniform_materialization() {
        let spec = GridSpec::new(4.0, 1 << 12).unwrap();
        let d = materialize(&Family::Uniform, &spec).unwrap();
        let c = 0.5 / 3f64.sqrt();
        for (m, &v) in d.values().iter().enumerate() {
            let x = spec.node(m);
            if x.abs() <= 3f64.sqrt() {
                assert_eq!(v, c);
            } else {
                assert_eq!(v, 0.0);
            }
        }
        assert!((d.mass() - 1.0).abs() < 1e-13);
        assert!((d.moment(4) - 1.8).abs() < 1e-12);
        assert!(d.moment(3).abs() < 1e-14);
        let g = d.cumulants(4).unwrap();
        assert!((g.get(4) + 1.2).abs() < 1e-12);
    }

    #[test]
    fn normal_materialization() {
        let spec = GridSpec::default();
        let a = materialize(&Family::standard_normal(), &spec).unwrap();
        let b = materialize(&Family::exp_series(vec![1.0, 0.0, 0.0]).unwrap(), &spec).unwrap();
        for m in (0..spec.points()).step_by(97) {
            let x = spec.node(m);
            let phi = (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
            assert!((a.values()[m] - phi).abs() <= 1e-15 * phi.max(1e-300));
            assert!((b.values()[m] - phi).abs() <= 1e-14 * phi.max(1e-300));
        }
        assert!((a.moment(6) - 15.0).abs() < 1e-10);
        let g = a.cumulants(6).unwrap();
        assert!(g.as_slice().iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let spec = GridSpec::new(4.0, 1 << 12).unwrap();
        let wide = Family::mixture(&[(2.5, 0.2), (0.625, 0.8)]).unwrap();
        assert!(matches!(materialize(&wide, &spec), Err(Error::TailMass { .. })));
        // strongly negative series coefficients break positivity
        let bad = Family::exp_series(vec![1.0, 0.0, -3.0]).unwrap();
        assert!(matches!(
            materialize(&bad, &GridSpec::default()),
            Err(Error::NegativeDensity { .. })
        ));
    }

    #[test]
    fn shifted_density_is_not_standardized() {
        let spec = GridSpec::default();
        let values = spec.nodes().iter().map(|x| Family::standard_normal().pdf(x - 0.5).unwrap()).collect();
        let d = GridDensity::new(spec, values).unwrap();
        assert!(matches!(d.cumulants(4), Err(Error::NotStandardized { .. })));
    }

    #[test]
    fn csv_roundtrip() {
        let spec = GridSpec::new(8.0, 256).unwrap();
        let mut s = String::from("x,p\n");
        for x in spec.nodes() {
            s += &format!("{x},{}\n", Family::standard_normal().pdf(x).unwrap());
        }
        let d = GridDensity::from_csv(s.as_bytes()).unwrap();
        assert_eq!(d.spec(), &spec);
        assert!(GridDensity::from_csv("0,1\n1,1\n2,1\n".as_bytes()).is_err());
    }
}
