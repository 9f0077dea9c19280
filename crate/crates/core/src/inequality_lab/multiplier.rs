//! Hörmander-type size of a multiplier symbol and its action on the
//! sup-type Triebel-Lizorkin norm.

use std::ops::RangeInclusive;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::family::{random_raw_field, stream_rng, RandomFamilySpec};
use super::report::{RatioReport, TrialRow};
use crate::bump_factory::SmoothStep;
use crate::dyadic_norms::{f_norm, ShellRange};
use crate::error::{Error, Result};
use crate::real::pow2;
use crate::sample_grid::{forward_spectrum, synthesize, GridSpec, SampledField, Spectrum};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Symbol {
    Identity,
    /// `|xi|^(i tau)`, zero at the origin.
    ImaginaryPower { tau: f64 },
    /// `xi_1 / |xi|`, zero at the origin.
    Sign,
    /// `|xi|^a`; unbounded unless `a = 0`.
    Power { a: f64 },
}

impl Symbol {
    pub fn eval(&self, xi: [f64; 2]) -> Complex<f64> {
        let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
        match *self {
            Symbol::Identity => Complex::new(1.0, 0.0),
            Symbol::ImaginaryPower { tau } if r > 0.0 => Complex::from_polar(1.0, tau * r.ln()),
            Symbol::Sign if r > 0.0 => Complex::new(xi[0] / r, 0.0),
            Symbol::Power { a } if r > 0.0 => Complex::new(r.powf(a), 0.0),
            _ => Complex::new(0.0, 0.0),
        }
    }

    /// Refuses symbols that are not essentially bounded.
    pub fn check_bounded(&self) -> Result<()> {
        match *self {
            Symbol::Power { a } if a != 0.0 => Err(Error::HypothesisViolated(format!("|xi|^{a} is not essentially bounded"))),
            Symbol::ImaginaryPower { tau } if !tau.is_finite() => Err(Error::InvalidParameter("tau must be finite".into())),
            _ => Ok(()),
        }
    }
}

const CUT_OUTER: SmoothStep = SmoothStep { plateau: 2.0, support: 4.0 };
const CUT_INNER: SmoothStep = SmoothStep { plateau: 0.25, support: 0.5 };

/// Cutoff equal to 1 on `1/2 <= |xi| <= 2` and vanishing outside `1/4 < |xi| < 4`.
pub fn hormander_cutoff(r: f64) -> f64 {
    CUT_OUTER.eval(r) * (1.0 - CUT_INNER.eval(r))
}

// The localized symbol lives on the periodic box [-8, 8)^d, far from its support.
const XI_LOG2_SIDE: i32 = 4;

fn xi_samples(dim: usize) -> Result<usize> {
    match dim {
        1 => Ok(1 << 16),
        2 => Ok(1 << 9),
        _ => Err(Error::InvalidGrid(format!("dimension {dim} not supported"))),
    }
}

/// `||m(2^k .) phi||` in the Sobolev space of order `alpha`, through the
/// weight `(1 + |x|^2)^alpha` on the transform of the localized symbol.
pub fn localized_sobolev_norm(m: &Symbol, k: i32, alpha: f64, dim: usize) -> Result<f64> {
    let g = GridSpec::new(dim, XI_LOG2_SIDE, xi_samples(dim)?)?;
    let half = g.side() / 2.0;
    let scale = pow2(k);
    let local = SampledField::<f64>::from_fn(g, |p| {
        let c = p.map(|v| if v >= half { v - g.side() } else { v });
        let r = (c[0] * c[0] + c[1] * c[1]).sqrt();
        let cut = hormander_cutoff(r);
        if cut == 0.0 {
            Complex::new(0.0, 0.0)
        } else {
            m.eval([scale * c[0], scale * c[1]]) * cut
        }
    });
    let spec = forward_spectrum(&local);
    let dx = 1.0 / g.volume();
    let total: f64 = spec
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let x = g.freq_norm(i);
            (1.0 + x * x).powf(alpha) * c.norm_sqr()
        })
        .sum();
    Ok((total * dx).sqrt())
}

/// Supremum of [`localized_sobolev_norm`] over the given dilations.
pub fn hormander_norm(m: &Symbol, alpha: f64, dim: usize, ks: RangeInclusive<i32>) -> Result<f64> {
    m.check_bounded()?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must be positive")));
    }
    let mut best = 0.0f64;
    for k in ks {
        best = best.max(localized_sobolev_norm(m, k, alpha, dim)?);
    }
    Ok(best)
}

/// Applies the multiplier to a field; band certificates carry over.
pub fn apply_multiplier(m: &Symbol, f: &SampledField<f64>) -> Result<SampledField<f64>> {
    m.check_bounded()?;
    let mut spec: Spectrum<f64> = forward_spectrum(f);
    spec.apply(|xi| m.eval(xi));
    let out = synthesize(&spec);
    Ok(match f.band() {
        Some(b) => out.with_band(b),
        None => out,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MultiplierConfig {
    pub dim: usize,
    pub log2_side: i32,
    pub log2_n: Vec<i32>,
    pub q: f64,
    /// Defaults to one above the threshold `d / min(1, q) - d / 2`.
    pub alpha: Option<f64>,
    pub symbol: Symbol,
    pub family: RandomFamilySpec,
}

impl Default for MultiplierConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            log2_side: 0,
            log2_n: vec![9, 10],
            q: 2.0,
            alpha: None,
            symbol: Symbol::ImaginaryPower { tau: 1.0 },
            family: RandomFamilySpec::default(),
        }
    }
}

impl MultiplierConfig {
    pub fn threshold(&self) -> f64 {
        let d = self.dim as f64;
        d / self.q.min(1.0) - d / 2.0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(self.threshold() + 1.0)
    }
}

/// `||T_m f|| / (A_alpha[m] ||f||)` in the homogeneous sup-type norm with
/// smoothness 0, over random fields.
pub fn check_multiplier(cfg: &MultiplierConfig) -> Result<RatioReport> {
    if !(cfg.q > 0.0 && cfg.q.is_finite()) {
        return Err(Error::InvalidParameter("q must be positive and finite".into()));
    }
    let alpha = cfg.alpha();
    if alpha <= cfg.threshold() {
        return Err(Error::HypothesisViolated(format!("alpha = {alpha} must exceed {}", cfg.threshold())));
    }
    cfg.symbol.check_bounded()?;
    let mut rows = Vec::new();
    let mut size = 0.0f64;
    for &ln in &cfg.log2_n {
        let g = GridSpec::new(cfg.dim, cfg.log2_side, 1usize << ln)?;
        let range = ShellRange::full(g, true);
        // dilations reaching every shell of this grid
        let a = hormander_norm(&cfg.symbol, alpha, cfg.dim, range.k_lo - 2..=range.k_hi + 2)?;
        size = size.max(a);
        let got = (0..cfg.family.count)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream_rng(cfg.family.seed, &[t as i64, ln as i64]);
                let f = random_raw_field(g, 0.5 * cfg.dim as f64, &mut rng);
                let tf = apply_multiplier(&cfg.symbol, &f)?;
                let lhs = f_norm(&tf, 0.0, f64::INFINITY, cfg.q, true, range)?.value;
                let rhs = f_norm(&f, 0.0, f64::INFINITY, cfg.q, true, range)?.value;
                Ok(TrialRow::new("ratio", ln as f64, t, lhs, a * rhs))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(got);
    }
    Ok(RatioReport::build("multiplier", cfg, "log2_n", rows)?.with_note(format!("alpha = {alpha}, A_alpha = {size}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bump_factory::mollifier;
    use crate::quadrature::GaussLegendre;

    // derivative of a smooth step from the mollifier, independent of the FFT path
    fn step_prime(s: SmoothStep, r: f64, mass: f64) -> f64 {
        if r <= s.plateau || r >= s.support {
            return 0.0;
        }
        let w = s.support - s.plateau;
        let u = 2.0 * (r - s.plateau) / w - 1.0;
        -mollifier(u) / mass * 2.0 / w
    }

    #[test]
    fn identity_size_matches_plancherel_quadrature() {
        let rule = GaussLegendre::new(24);
        let mass = rule.integrate(-1.0, 1.0, 64, mollifier);
        let phi_prime = |r: f64| {
            step_prime(CUT_OUTER, r, mass) * (1.0 - CUT_INNER.eval(r)) - CUT_OUTER.eval(r) * step_prime(CUT_INNER, r, mass)
        };
        let integrand = |r: f64| hormander_cutoff(r).powi(2) + phi_prime(r).powi(2) / (4.0 * std::f64::consts::PI.powi(2));
        let pieces = [(0.25, 0.5), (0.5, 2.0), (2.0, 4.0)];
        let half: f64 = pieces.iter().map(|&(a, b)| rule.integrate(a, b, 64, integrand)).sum();
        let want = (2.0 * half).sqrt();
        let got = hormander_norm(&Symbol::Identity, 1.0, 1, 0..=0).unwrap();
        assert!((got - want).abs() < 1e-8 * want, "{got} vs {want}");
    }

    #[test]
    fn dilation_invariant_symbols() {
        let m = Symbol::ImaginaryPower { tau: 1.0 };
        let a = localized_sobolev_norm(&m, 0, 1.5, 1).unwrap();
        let b = localized_sobolev_norm(&m, 3, 1.5, 1).unwrap();
        assert!((a - b).abs() < 1e-9 * a);
    }

    #[test]
    fn unbounded_symbols_are_refused() {
        assert!(hormander_norm(&Symbol::Power { a: 1.0 }, 1.0, 1, 0..=0).is_err());
        let cfg = MultiplierConfig { symbol: Symbol::Power { a: -0.5 }, ..Default::default() };
        assert!(check_multiplier(&cfg).is_err());
    }

    #[test]
    fn identity_ratio_is_reciprocal_size() {
        let cfg = MultiplierConfig {
            symbol: Symbol::Identity,
            log2_n: vec![8],
            family: RandomFamilySpec { count: 2, ..Default::default() },
            ..Default::default()
        };
        let rep = check_multiplier(&cfg).unwrap();
        let a = hormander_norm(&Symbol::Identity, cfg.alpha(), 1, 0..=0).unwrap();
        for r in &rep.rows {
            assert!((r.ratio.unwrap() - 1.0 / a).abs() < 1e-12 / a);
        }
    }
}
