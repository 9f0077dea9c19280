//! Far modulated bumps `f_k(x) = eta(2^-k x - k^alpha) e^(2 pi i 2^k x)`.
//!
//! Each scale is evaluated on its own grid in the variable `u = 2^-k x`,
//! where the bump has unit width. Only `|f_k|` enters the quantities below,
//! so the modulation never has to be sampled.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::growth::{GrowthFit, GrowthReport, GrowthRow};
use crate::bump_factory::{make_eta_with_band, FourierProfile};
use crate::error::{Error, Result};
use crate::maximal_operators::{hl_maximal_at, WindowLadder};
use crate::real::pow2;
use crate::sample_grid::{band_check, GridSpec, SampledField};
use crate::stats::linear_fit;

/// Largest scale for which `2^k k^alpha` is still meaningful in double precision.
pub const MAX_SCALE: u32 = 900;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModulatedFamilySpec {
    /// Defaults to `r / q`, the divergent choice.
    pub alpha: Option<f64>,
    pub r: f64,
    pub q: f64,
    /// Truncation levels `K`; scales `1..=K` are summed.
    pub ladder: Vec<u32>,
    /// Transform support radius of `eta`.
    pub eta_band: f64,
    /// Samples per unit length in `u`, as a power of two.
    pub resolution_log2: i32,
    /// Side lengths `2^m` (in `u`) of the cubes tried for the bounded side.
    pub cube_levels: Vec<i32>,
}

impl Default for ModulatedFamilySpec {
    fn default() -> Self {
        Self {
            alpha: None,
            r: 1.0,
            q: 2.0,
            ladder: (4..=9).map(|e| 1 << e).collect(),
            eta_band: 2.0,
            resolution_log2: 4,
            cube_levels: (-4..=4).collect(),
        }
    }
}

impl ModulatedFamilySpec {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(self.r / self.q)
    }

    /// The same family with `alpha` doubled, where the sum converges.
    pub fn doubled(&self) -> Self {
        Self { alpha: Some(2.0 * self.alpha()), ..self.clone() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.q > 0.0 && self.alpha() > 0.0) {
            return Err(Error::InvalidParameter("alpha, r and q must be positive".into()));
        }
        if let Some(&k) = self.ladder.iter().find(|&&k| k == 0 || k > MAX_SCALE) {
            return Err(Error::InvalidParameter(format!("truncation {k} outside 1..={MAX_SCALE}")));
        }
        if !(self.eta_band > 0.0) {
            return Err(Error::InvalidParameter(format!("eta band {} must be positive", self.eta_band)));
        }
        if self.eta_band > 4.0 {
            // keeps the shifted band inside |xi| <= 2^(k+1) from k = 1 on
            return Err(Error::HypothesisViolated(format!("eta band {} exceeds 4", self.eta_band)));
        }
        Ok(())
    }
}

/// One scale of the family on its rescaled grid.
#[derive(Clone, Debug)]
pub struct ModulatedScale {
    pub k: u32,
    pub grid: GridSpec,
    /// `|f_k(2^k u)| = eta(u - k^alpha)`.
    pub modulus: SampledField<f64>,
    /// `2^(k+1) - (2^k + B 2^-k)`: room between the shifted band and `E(2^k)`.
    pub band_margin: f64,
}

fn torus_log2(k: u32, alpha: f64) -> i32 {
    let need = 4.0 * ((k as f64).powf(alpha) + 4.0);
    (need.log2().ceil() as i32).max(3)
}

/// Builds scale `k` of the family.
pub fn modulated_scale(spec: &ModulatedFamilySpec, eta: &FourierProfile, k: u32) -> Result<ModulatedScale> {
    spec.validate()?;
    if k == 0 || k > MAX_SCALE {
        return Err(Error::InvalidParameter(format!("scale {k} outside 1..={MAX_SCALE}")));
    }
    let side = torus_log2(k, spec.alpha());
    let grid = GridSpec::new(1, side, 1usize << (side + spec.resolution_log2))?;
    let modulus = eta.realize::<f64>(grid, [(k as f64).powf(spec.alpha()), 0.0], 0)?;
    let kf = k as i32;
    let band_margin = pow2(kf + 1) - (pow2(kf) + eta.rho * pow2(-kf));
    Ok(ModulatedScale { k, grid, modulus, band_margin })
}

/// The modulated family as per-scale handles.
pub fn build_modulated_family(spec: &ModulatedFamilySpec, k_max: u32) -> Result<Vec<ModulatedScale>> {
    spec.validate()?;
    let eta = make_eta_with_band(spec.eta_band);
    (1..=k_max).into_par_iter().map(|k| modulated_scale(spec, &eta, k)).collect()
}

impl ModulatedScale {
    /// Fraction of spectral energy of the modulus outside the `eta` band.
    pub fn band_defect(&self) -> Result<f64> {
        band_check(&self.modulus, self.modulus.band().ok_or(Error::Uncertified)?)
    }

    /// `M_r f_k` at the samples covering `x in [0, 1/2)`, with the length of
    /// `[0, 1/2)` each sample stands for (in `x`).
    pub fn maximal_near_origin(&self, r: f64) -> Result<Vec<(f64, f64)>> {
        let h = self.grid.spacing();
        let end = pow2(-(self.k as i32) - 1);
        let cells = (end / h).ceil() as usize;
        let ladder = WindowLadder::new(&self.modulus, r)?;
        let pts: Vec<usize> = (0..cells).collect();
        let vals = hl_maximal_at(&ladder, &pts);
        let scale = pow2(self.k as i32);
        Ok(pts
            .iter()
            .zip(vals)
            .map(|(&i, v)| {
                let a = i as f64 * h;
                let b = ((i + 1) as f64 * h).min(end);
                (v, (b - a) * scale)
            })
            .collect())
    }

    /// `int_0^(1/2) (M_r f_k)^q dx`.
    pub fn lhs_term(&self, r: f64, q: f64) -> Result<f64> {
        Ok(self.maximal_near_origin(r)?.iter().map(|(v, w)| v.powf(q) * w).sum())
    }
}

// Largest average of sum_j |f_j|^q over dyadic cubes near bump k, where j
// runs over k and its two neighbours (those allowed by the cube size).
fn rhs_term(spec: &ModulatedFamilySpec, eta: &FourierProfile, s: &ModulatedScale) -> Result<f64> {
    let alpha = spec.alpha();
    let k = s.k as i32;
    let g = s.grid;
    // |f_j(2^k u)| = eta(2^(k-j) (u - 2^(j-k) j^alpha))
    let mut parts: Vec<(i32, Vec<f64>)> = vec![(k, s.modulus.values().iter().map(|c| c.re).collect())];
    for j in [k - 1, k + 1] {
        if j >= 1 {
            let center = pow2(j - k) * (j as f64).powf(alpha);
            let f = eta.realize::<f64>(g, [center, 0.0], k - j)?;
            parts.push((j, f.values().iter().map(|c| c.re).collect()));
        }
    }
    let h = g.spacing();
    let mut best = 0.0f64;
    for &m in &spec.cube_levels {
        let per = pow2(m) / h;
        if per < 1.0 || pow2(m) > g.side() {
            continue;
        }
        let per = per as usize;
        // a cube of side 2^(k+m) in x only carries scales j >= -(k+m)
        let mut acc = vec![0.0; g.len()];
        for (j, v) in &parts {
            if *j >= -(k + m) {
                for (a, x) in acc.iter_mut().zip(v) {
                    *a += x.max(0.0).powf(spec.q);
                }
            }
        }
        for chunk in acc.chunks(per) {
            best = best.max(chunk.iter().sum::<f64>() / per as f64);
        }
    }
    Ok(best)
}

/// Truncated sums for every `K` in the ladder: the maximal side
/// `(2 sum_(k<=K) int_0^(1/2) (M_r f_k)^q)` (a `q`-th power) and the
/// bounded side over the representative cubes.
pub fn measure_modulated_divergence(spec: &ModulatedFamilySpec) -> Result<GrowthReport> {
    spec.validate()?;
    let k_max = spec.ladder.iter().copied().max().ok_or_else(|| Error::InvalidParameter("empty ladder".into()))?;
    let eta = make_eta_with_band(spec.eta_band);
    let per_scale: Vec<(f64, f64, f64)> = (1..=k_max)
        .into_par_iter()
        .map(|k| {
            let s = modulated_scale(spec, &eta, k)?;
            if s.band_margin < 0.0 {
                return Err(Error::Certificate(format!("scale {k} leaves E(2^k)")));
            }
            let near = s.maximal_near_origin(spec.r)?;
            let lhs: f64 = near.iter().map(|(v, w)| v.powf(spec.q) * w).sum();
            Ok((lhs, rhs_term(spec, &eta, &s)?, near[0].0))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut ladder = spec.ladder.clone();
    ladder.sort_unstable();
    ladder.dedup();
    let mut rows = Vec::new();
    for &big_k in &ladder {
        let upto = &per_scale[..big_k as usize];
        // average over P = [0, 1/2)
        let lhs_q = 2.0 * upto.iter().rev().map(|t| t.0).sum::<f64>();
        let rhs = upto.iter().map(|t| t.1).fold(0.0, f64::max).powf(1.0 / spec.q);
        rows.push(GrowthRow { series: "truncated".into(), x: big_k as f64, lhs: lhs_q, rhs });
    }
    // normalised lower bound k^(alpha/r) M_r f_k(0), expected to stay away from 0
    for &big_k in &ladder {
        let v = per_scale[big_k as usize - 1].2;
        let norm = v * (big_k as f64).powf(spec.alpha() / spec.r);
        rows.push(GrowthRow { series: "normalised_maximal".into(), x: big_k as f64, lhs: norm, rhs: v });
    }
    let xs: Vec<f64> = ladder.iter().map(|&k| (k as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().filter(|r| r.series == "truncated").map(|r| r.lhs).collect();
    let mut fits = Vec::new();
    if let Some(f) = linear_fit(&xs, &ys) {
        fits.push(GrowthFit { series: "truncated".into(), model: "lhs_q_vs_ln_k".into(), exponent: f.slope, predicted: vec![], r2: f.r2 });
    }
    // empirical exponent of the maximal side against ln K
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.powf(1.0 / spec.q).ln()).collect();
    if let Some(f) = linear_fit(&lx, &ly) {
        fits.push(GrowthFit {
            series: "truncated".into(),
            model: "lhs_vs_ln_k_loglog".into(),
            exponent: f.slope,
            predicted: vec![1.0 / spec.q, 1.0 / spec.r],
            r2: f.r2,
        });
    }
    let mut report = GrowthReport {
        family: "modulated".into(),
        params: serde_json::to_value(spec)?,
        x_label: "K".into(),
        rows,
        fits,
        notes: vec![format!("alpha = {}", spec.alpha())],
    };
    if ys.len() >= 2 {
        let n = ys.len();
        report.notes.push(format!("last increment of the q-th power sum: {}", (ys[n - 1] - ys[n - 2]).abs()));
    }
    Ok(report)
}

/// Absolute change of the `q`-th power maximal sum between the last two
/// ladder entries.
pub fn cauchy_increment(report: &GrowthReport) -> Option<f64> {
    let ys: Vec<f64> = report.series("truncated").iter().map(|r| r.lhs).collect();
    let n = ys.len();
    (n >= 2).then(|| (ys[n - 1] - ys[n - 2]).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maximal_operators::brute;

    #[test]
    fn peak_value_is_eta_at_zero() {
        let spec = ModulatedFamilySpec::default();
        let eta = make_eta_with_band(spec.eta_band);
        for k in [1u32, 4, 16] {
            let s = modulated_scale(&spec, &eta, k).unwrap();
            // k^alpha is a grid point here; the torus sees the periodised eta
            let idx = ((k as f64).powf(spec.alpha()) / s.grid.spacing()).round() as usize;
            let side = s.grid.side();
            let g0: f64 = (-40..=40).map(|j| eta.generator_spatial(j as f64 * side).unwrap()).sum();
            let want = eta.square_scale().unwrap() * g0 * g0;
            let got = s.modulus.values()[idx].re;
            assert!((got - want).abs() < 1e-12 * want, "k {k}: {got} vs {want}");
            assert!((want - eta.spatial(0.0)).abs() < 1e-6 * want);
            assert!(s.band_margin >= 0.0);
            assert!(s.band_defect().unwrap() < 1e-24);
        }
    }

    #[test]
    fn maximal_near_origin_matches_window_oracle() {
        let spec = ModulatedFamilySpec::default();
        let eta = make_eta_with_band(spec.eta_band);
        for k in [1u32, 3, 9] {
            let s = modulated_scale(&spec, &eta, k).unwrap();
            let fast = s.maximal_near_origin(spec.r).unwrap();
            let all = brute::hl_maximal(&s.modulus, spec.r, true);
            for (i, (v, _)) in fast.iter().enumerate() {
                assert!((v - all[i]).abs() <= 1e-8 * all[i]);
            }
        }
    }

    #[test]
    fn dilated_grid_gives_the_same_values() {
        // f_k on an x-grid with spacing 2^k h equals the rescaled field sample by sample
        let spec = ModulatedFamilySpec::default();
        let eta = make_eta_with_band(spec.eta_band);
        let k = 3;
        let s = modulated_scale(&spec, &eta, k).unwrap();
        let gx = s.grid.dilate(k as i32).unwrap();
        let fx = eta.realize::<f64>(gx, [pow2(k as i32) * (k as f64).powf(spec.alpha()), 0.0], -(k as i32)).unwrap();
        let mu = crate::maximal_operators::hl_maximal(&s.modulus, spec.r).unwrap().values;
        let mx = crate::maximal_operators::hl_maximal(&fx, spec.r).unwrap().values;
        for (a, b) in mu.iter().zip(&mx) {
            assert!((a - b).abs() <= 1e-8 * a.abs().max(1e-300));
        }
    }

    #[test]
    fn refuses_empty_band() {
        let spec = ModulatedFamilySpec { eta_band: 0.0, ..Default::default() };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn refuses_huge_scales() {
        let spec = ModulatedFamilySpec { ladder: vec![1000], ..Default::default() };
        assert!(measure_modulated_divergence(&spec).is_err());
    }
}
