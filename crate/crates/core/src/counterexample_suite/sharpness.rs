//! Lattices of small bumps `f_k = h_k * beta_k`, with `h_k` the indicator of
//! cubes of side `2^(-k-M)` spaced `2^(-k+N)` apart.
//!
//! On the torus of side `2^-mu` every `f_k` is periodic with period
//! `2^(-k+N)`. In `v = 2^k x` all scales share one period cell of length
//! `2^N`, so each per-scale cube average equals one cell average and the
//! sums over `k` become counts.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::growth::{offset_power_fit, GrowthFit, GrowthReport, GrowthRow};
use crate::bump_factory::{make_beta, FourierProfile};
use crate::error::{Error, Result};
use crate::maximal_operators::{hl_maximal, peetre_maximal};
use crate::real::pow2;
use crate::sample_grid::{synthesize, BandSpec, GridSpec, SampledField, Spectrum};
use crate::stats::linear_fit;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SharpnessFamilySpec {
    /// Cube side `2^(-k-M)`.
    pub m: u32,
    pub n_list: Vec<u32>,
    pub mu: i32,
    pub q: f64,
    /// Peetre exponents for the growing side.
    pub sigma_list: Vec<f64>,
    /// Exponents `r`; the Peetre ratio uses `sigma = d / r`.
    pub r_list: Vec<f64>,
    /// Largest scale summed, on top of the natural cap `2^N`.
    pub k_cap: Option<u64>,
    /// Samples per bump side, as a power of two.
    pub oversample_log2: u32,
}

impl Default for SharpnessFamilySpec {
    fn default() -> Self {
        Self {
            m: 3,
            n_list: (3..=8).collect(),
            mu: 0,
            q: 2.0,
            sigma_list: vec![0.5, 0.25],
            r_list: vec![1.0, 2.0],
            k_cap: None,
            oversample_log2: 2,
        }
    }
}

impl SharpnessFamilySpec {
    fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q.is_finite()) {
            return Err(Error::InvalidParameter("q must be positive and finite".into()));
        }
        if self.sigma_list.iter().chain(&self.r_list).any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidParameter("sigma and r must be positive".into()));
        }
        if self.oversample_log2 < 1 {
            return Err(Error::InsufficientResolution { spacing: pow2(-(self.m as i32)), required: pow2(-(self.m as i32) - 1) });
        }
        if self.n_list.iter().any(|&n| n == 0 || n + self.m + self.oversample_log2 > 22) {
            return Err(Error::InvalidParameter("cell grid too large".into()));
        }
        Ok(())
    }

    /// Number of scales `k = N + mu ..= min(2^N, cap)`.
    pub fn scale_count(&self, n: u32) -> u64 {
        let lo = n as i64 + self.mu as i64;
        let mut hi = 1i64 << n;
        if let Some(c) = self.k_cap {
            hi = hi.min(c as i64);
        }
        (hi - lo + 1).max(0) as u64
    }
}

/// One period cell of the family in the variable `v = 2^k x`.
#[derive(Clone, Debug)]
pub struct SharpnessCell {
    pub n: u32,
    pub m: u32,
    pub grid: GridSpec,
    /// `beta * chi` periodised over the cell.
    pub field: SampledField<f64>,
    /// Indicator of `[0, 2^-M]` sampled on the cell.
    pub indicator: SampledField<f64>,
}

// transform of the indicator of [0, w]
fn box_transform(xi: f64, w: f64) -> Complex<f64> {
    if xi == 0.0 {
        return Complex::new(w, 0.0);
    }
    let a = 2.0 * std::f64::consts::PI * xi;
    // (1 - e^(-i a w)) / (i a)
    Complex::new((a * w).sin() / a, ((a * w).cos() - 1.0) / a)
}

/// Builds the period cell for lattice spacing exponent `n`.
pub fn build_sharpness_cell(spec: &SharpnessFamilySpec, beta: &FourierProfile, n: u32) -> Result<SharpnessCell> {
    spec.validate()?;
    let w = pow2(-(spec.m as i32));
    let log2_n = n + spec.m + spec.oversample_log2;
    let grid = GridSpec::new(1, n as i32, 1usize << log2_n)?;
    if grid.spacing() > w / 2.0 {
        return Err(Error::InsufficientResolution { spacing: grid.spacing(), required: w / 2.0 });
    }
    let mut spec_c = Spectrum::<f64>::zeros(grid);
    for i in 0..grid.len() {
        let xi = grid.frequency(i)[0];
        let b = beta.transform(xi.abs());
        if b != 0.0 {
            spec_c.coeffs[i] = box_transform(xi, w) * b;
        }
    }
    // beta is real and even, the box is real: keep the real part
    let field = synthesize(&spec_c).map(|c| Complex::new(c.re, 0.0)).certified(BandSpec::new(0, beta.rho))?;
    let h = grid.spacing();
    let indicator = SampledField::from_fn(grid, |p| Complex::new(if p[0] <= w + 0.5 * h { 1.0 } else { 0.0 }, 0.0));
    Ok(SharpnessCell { n, m: spec.m, grid, field, indicator })
}

impl SharpnessCell {
    fn cell_mean(&self, v: impl Iterator<Item = f64>) -> f64 {
        v.sum::<f64>() * self.grid.spacing() / self.grid.side()
    }

    /// Cell average of `|f|^q`; equals every per-scale cube average.
    pub fn upper_cell_value(&self, q: f64) -> f64 {
        self.cell_mean(self.field.values().iter().map(|c| c.norm().powf(q)))
    }

    /// Cell average of `(P_sigma f)^q`, Peetre weight `(1 + |w|)^sigma` in `v`.
    pub fn lower_cell_value(&self, sigma: f64, q: f64) -> Result<f64> {
        let p = peetre_maximal(&self.field, sigma, 0)?;
        Ok(self.cell_mean(p.values.iter().map(|v| v.powf(q))))
    }

    /// `(beta * chi)` at the centre of the small cube.
    pub fn center_value(&self) -> f64 {
        let idx = (pow2(-(self.m as i32) - 1) / self.grid.spacing()).round() as usize;
        self.field.values()[idx].re
    }

    /// `max |f| / M_s h` over the cell.
    pub fn domination_ratio(&self, s: f64) -> Result<f64> {
        let mh = hl_maximal(&self.indicator, s)?;
        Ok(self.field.values().iter().zip(&mh.values).map(|(f, m)| f.norm() / m).fold(0.0, f64::max))
    }
}

/// Largest relative difference between the cell averages and the same
/// averages over the whole torus of side `2^-mu`, for scales `k = N + mu ..`
/// with `extra` additional periods.
pub fn self_similarity_defect(spec: &SharpnessFamilySpec, n: u32, extra: u32, sigma: f64) -> Result<f64> {
    let beta = make_beta(spec.m)?;
    let cell = build_sharpness_cell(spec, &beta, n)?;
    let up = cell.upper_cell_value(spec.q);
    let lo = cell.lower_cell_value(sigma, spec.q)?;
    let mut worst = 0.0f64;
    for e in 0..=extra {
        // the torus in v has length 2^(k - mu) = 2^(n + e)
        let big = build_sharpness_cell(spec, &beta, n + e)?;
        // periodic copies of the single-bump cell: re-synthesise with bumps every 2^n
        let g = big.grid;
        let period = 1usize << (n + spec.m + spec.oversample_log2);
        let vals: Vec<Complex<f64>> = (0..g.len()).map(|i| cell.field.values()[i % period]).collect();
        let tiled = SampledField::new(g, vals)?;
        let direct = {
            let mut s = Spectrum::<f64>::zeros(g);
            let w = pow2(-(spec.m as i32));
            for i in 0..g.len() {
                let xi = g.frequency(i)[0];
                let b = beta.transform(xi.abs());
                if b != 0.0 {
                    // sum over the 2^e lattice points j 2^n
                    let mut lat = Complex::new(0.0, 0.0);
                    for j in 0..(1u64 << e) {
                        let turns = (xi * (j as f64) * pow2(n as i32)).rem_euclid(1.0);
                        lat += Complex::from_polar(1.0, -2.0 * std::f64::consts::PI * turns);
                    }
                    s.coeffs[i] = box_transform(xi, w) * b * lat;
                }
            }
            synthesize(&s).map(|c| Complex::new(c.re, 0.0)).certified(BandSpec::new(0, beta.rho))?
        };
        for (a, b) in direct.values().iter().zip(tiled.values()) {
            worst = worst.max((a.re - b.re).abs() / cell.center_value());
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() * g.spacing() / g.side();
        let up_w = mean(&direct.values().iter().map(|c| c.norm().powf(spec.q)).collect::<Vec<_>>());
        let lo_w = mean(&peetre_maximal(&direct, sigma, 0)?.values.iter().map(|v| v.powf(spec.q)).collect::<Vec<_>>());
        worst = worst.max((up_w - up).abs() / up).max((lo_w - lo).abs() / lo);
    }
    Ok(worst)
}

// 1 + 2^(N-1): the Peetre weight at the far end of a cell
fn half_cell(n: f64) -> f64 {
    1.0 + (n - 1.0).exp2()
}

/// Sides of both claims for every `N`, with exponent fits.
///
/// Series: `upper` (q-power sums), `lower_sigma=s` (Peetre sums), and
/// `peetre_r=r` (Peetre with `sigma = 1 / r` over the upper side).
pub fn measure_sharpness_rates(spec: &SharpnessFamilySpec) -> Result<GrowthReport> {
    spec.validate()?;
    let beta = make_beta(spec.m)?;
    let q = spec.q;
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    let mut ns = spec.n_list.clone();
    ns.sort_unstable();
    ns.dedup();
    let mut used = Vec::new();
    for &n in &ns {
        let count = spec.scale_count(n) as f64;
        if count == 0.0 {
            notes.push(format!("N = {n}: no admissible scales"));
            continue;
        }
        used.push(n);
        let cell = build_sharpness_cell(spec, &beta, n)?;
        let upper = (count * cell.upper_cell_value(q)).powf(1.0 / q);
        rows.push(GrowthRow { series: "upper".into(), x: n as f64, lhs: upper, rhs: 1.0 });
        for &sigma in &spec.sigma_list {
            let lower = (count * cell.lower_cell_value(sigma, q)?).powf(1.0 / q);
            rows.push(GrowthRow { series: format!("lower_sigma={sigma}"), x: n as f64, lhs: lower, rhs: 1.0 });
        }
        for &r in &spec.r_list {
            let lhs = (count * cell.lower_cell_value(1.0 / r, q)?).powf(1.0 / q);
            rows.push(GrowthRow { series: format!("peetre_r={r}"), x: n as f64, lhs: lhs / upper, rhs: upper });
        }
        if n == ns[0] {
            notes.push(format!("center value {} against 2^-M = {}", cell.center_value(), pow2(-(spec.m as i32))));
            notes.push(format!("domination ratio with s = q/2: {}", cell.domination_ratio(q / 2.0)?));
        }
    }
    let xs: Vec<f64> = used.iter().map(|&n| n as f64).collect();
    let mut fits = Vec::new();
    for &sigma in &spec.sigma_list {
        let name = format!("lower_sigma={sigma}");
        let ys: Vec<f64> = rows.iter().filter(|r| r.series == name).map(|r| r.lhs).collect();
        // per-scale value times 2^N: the exact scale count is divided out
        let yq: Vec<f64> = ys.iter().zip(&used).map(|(y, &n)| y.powf(q) * pow2(n as i32) / spec.scale_count(n) as f64).collect();
        let critical = 1.0 / q;
        if (sigma - critical).abs() <= 1e-12 {
            // cell integral = a ln(1 + 2^(N-1))^gamma + b, expected gamma = 1
            if let Some((gamma, _, _, r2)) = offset_power_fit(&xs, &yq, |x, g| half_cell(x).ln().powf(g), 0.05, 4.0) {
                fits.push(GrowthFit { series: name.clone(), model: "offset_log_power".into(), exponent: gamma / q, predicted: vec![1.0 / q], r2 });
            }
            let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
            let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
            if let Some(f) = linear_fit(&lx, &ly) {
                fits.push(GrowthFit { series: name, model: "naive_loglog".into(), exponent: f.slope, predicted: vec![1.0 / q], r2: f.r2 });
            }
        } else if sigma < critical {
            // cell integral = a (1 + 2^(N-1))^gamma + b, expected gamma = 1 - sigma q
            if let Some((gamma, _, _, r2)) = offset_power_fit(&xs, &yq, |x, g| half_cell(x).powf(g), 0.01, 4.0) {
                fits.push(GrowthFit {
                    series: name.clone(),
                    model: "offset_cell_power".into(),
                    exponent: gamma / q,
                    predicted: vec![1.0 / q - sigma],
                    r2,
                });
            }
            let ly: Vec<f64> = ys.iter().map(|y| y.log2()).collect();
            if let Some(f) = linear_fit(&xs, &ly) {
                fits.push(GrowthFit { series: name, model: "naive_log2".into(), exponent: f.slope, predicted: vec![1.0 / q - sigma], r2: f.r2 });
            }
        }
    }
    for &r in &spec.r_list {
        let name = format!("peetre_r={r}");
        let ys: Vec<f64> = rows.iter().filter(|row| row.series == name).map(|row| row.lhs.log2()).collect();
        if let Some(f) = linear_fit(&xs, &ys) {
            fits.push(GrowthFit { series: name, model: "log2_ratio_vs_n".into(), exponent: f.slope, predicted: vec![], r2: f.r2 });
        }
    }
    Ok(GrowthReport { family: "sharpness".into(), params: serde_json::to_value(spec)?, x_label: "N".into(), rows, fits, notes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussLegendre;

    #[test]
    fn center_value_against_quadrature() {
        let spec = SharpnessFamilySpec::default();
        let beta = make_beta(spec.m).unwrap();
        let cell = build_sharpness_cell(&spec, &beta, 4).unwrap();
        let w = pow2(-(spec.m as i32));
        // (beta * chi)(w/2) = int_{-w/2}^{w/2} beta, plus far periodic copies that are negligible
        let rule = GaussLegendre::new(24);
        let want = rule.integrate(-w / 2.0, w / 2.0, 4, |t| beta.spatial(t));
        let got = cell.center_value();
        assert!((got - want).abs() < 1e-6 * want, "{got} {want}");
        assert!(got >= w);
    }

    #[test]
    fn cell_is_periodic_and_self_similar() {
        let spec = SharpnessFamilySpec::default();
        assert!(self_similarity_defect(&spec, 3, 2, 0.5).unwrap() < 1e-10);
    }

    #[test]
    fn refuses_unresolved_cubes() {
        let spec = SharpnessFamilySpec { oversample_log2: 0, ..Default::default() };
        assert!(measure_sharpness_rates(&spec).is_err());
    }

    #[test]
    fn scale_counts() {
        let spec = SharpnessFamilySpec::default();
        assert_eq!(spec.scale_count(4), 13);
        assert_eq!(SharpnessFamilySpec { k_cap: Some(10), ..spec.clone() }.scale_count(4), 7);
        assert_eq!(SharpnessFamilySpec { mu: 20, ..spec }.scale_count(3), 0);
    }
}
