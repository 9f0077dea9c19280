//! Compactly supported Fourier profiles built from the standard mollifier.
//!
//! Every profile is radial in frequency. Transforms are evaluated
//! analytically at whatever frequencies a consumer needs; the tabulated
//! `samples` exist for export and inspection. Spatial quantities
//! (certificates, [`FourierProfile::spatial`]) are one dimensional.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::real::{pow2, Real};
use crate::sample_grid::{synthesize, BandSpec, GridSpec, SampledField, Spectrum};

/// `exp(-1 / (1 - t^2))` on `(-1, 1)`, zero elsewhere.
pub fn mollifier(t: f64) -> f64 {
    let s = 1.0 - t * t;
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

fn rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(24))
}

const STEP_PANELS: usize = 8;

fn half_mass() -> f64 {
    static Z: OnceLock<f64> = OnceLock::new();
    *Z.get_or_init(|| rule().integrate(-1.0, 0.0, STEP_PANELS, mollifier))
}

/// Normalised primitive of the mollifier: 0 at -1, 1/2 at 0, 1 at 1.
pub fn mollifier_cdf(u: f64) -> f64 {
    if u <= -1.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else if u > 0.0 {
        1.0 - mollifier_cdf(-u)
    } else {
        0.5 * rule().integrate(-1.0, u, STEP_PANELS, mollifier) / half_mass()
    }
}

/// Radial smooth step: 1 on `|xi| <= plateau`, 0 on `|xi| >= support`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothStep {
    pub plateau: f64,
    pub support: f64,
}

impl SmoothStep {
    /// The basic step, 1 on the unit ball and 0 outside radius 2.
    pub const UNIT: SmoothStep = SmoothStep { plateau: 1.0, support: 2.0 };

    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        if r <= self.plateau {
            1.0
        } else if r >= self.support {
            0.0
        } else {
            let u = 2.0 * (r - self.plateau) / (self.support - self.plateau) - 1.0;
            1.0 - mollifier_cdf(u)
        }
    }
}

/// Transform of the Littlewood-Paley mother function at radius `r`.
pub fn mother_hat(r: f64) -> f64 {
    let t = SmoothStep::UNIT;
    t.eval(r) - t.eval(2.0 * r)
}

/// Transform of the father function at radius `r`.
pub fn father_hat(r: f64) -> f64 {
    SmoothStep::UNIT.eval(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Mother,
    Father,
    ReproducingKernel,
    Eta,
    EtaTilde,
    Gamma,
    Beta,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Shape {
    Annulus,
    Step(SmoothStep),
    /// `mollifier(|xi| / radius) / norm`
    Bump { radius: f64, norm: f64 },
    /// transform of `scale * |g|^2` where `g^(xi) = mollifier(|xi| / half)`
    Square { half: f64, scale: f64 },
}

/// A tabulated, certified Fourier profile.
#[derive(Clone, Debug, Serialize)]
pub struct FourierProfile {
    pub kind: ProfileKind,
    /// Support radius of the transform.
    pub rho: f64,
    /// Transform samples on `[0, 1.25 rho]`.
    pub samples: Vec<f64>,
    pub sample_spacing: f64,
    pub certificates: BTreeMap<String, f64>,
    #[serde(skip)]
    shape: Shape,
}

const TABLE_POINTS: usize = 4096;

impl FourierProfile {
    fn build(kind: ProfileKind, rho: f64, shape: Shape) -> Self {
        let mut p = Self {
            kind,
            rho,
            samples: Vec::new(),
            sample_spacing: 1.25 * rho / TABLE_POINTS as f64,
            certificates: BTreeMap::new(),
            shape,
        };
        p.samples = (0..=TABLE_POINTS).map(|i| p.transform(i as f64 * p.sample_spacing)).collect();
        p.certificates.insert("support_radius".into(), rho);
        p
    }

    /// The transform at frequency radius `r` (one dimensional for squared kinds).
    pub fn transform(&self, r: f64) -> f64 {
        let r = r.abs();
        match self.shape {
            Shape::Annulus => mother_hat(r),
            Shape::Step(s) => s.eval(r),
            Shape::Bump { radius, norm } => mollifier(r / radius) / norm,
            Shape::Square { half, scale } => {
                if r >= 2.0 * half {
                    return 0.0;
                }
                // autocorrelation of the generator
                let lo = r - half;
                let v = rule().integrate(lo, half, 8, |t| mollifier(t / half) * mollifier((r - t) / half));
                scale * v
            }
        }
    }

    /// For squared kinds, the transform of the generator `g`.
    pub fn generator(&self, r: f64) -> Option<f64> {
        match self.shape {
            Shape::Square { half, .. } => Some(mollifier(r.abs() / half)),
            _ => None,
        }
    }

    /// For squared kinds, the one dimensional spatial generator `g(x)`.
    pub fn generator_spatial(&self, x: f64) -> Option<f64> {
        match self.shape {
            Shape::Square { half, .. } => {
                let panels = 8 + (4.0 * x.abs() * half).ceil() as usize;
                Some(2.0 * rule().integrate(0.0, half, panels, |t| mollifier(t / half) * (2.0 * PI * x * t).cos()))
            }
            _ => None,
        }
    }

    /// Scale factor `s` of squared kinds (`profile = s |g|^2`).
    pub fn square_scale(&self) -> Option<f64> {
        match self.shape {
            Shape::Square { scale, .. } => Some(scale),
            _ => None,
        }
    }

    /// One dimensional spatial profile at `x`, by quadrature of the cosine transform.
    pub fn spatial(&self, x: f64) -> f64 {
        let cosine = |f: &dyn Fn(f64) -> f64, lo: f64, hi: f64| {
            let panels = 8 + (4.0 * x.abs() * hi).ceil() as usize;
            2.0 * rule().integrate(lo, hi, panels, |t| f(t) * (2.0 * PI * x * t).cos())
        };
        match self.shape {
            Shape::Annulus => cosine(&mother_hat, 0.5, 2.0),
            Shape::Step(s) => cosine(&|t| s.eval(t), 0.0, s.support),
            Shape::Bump { radius, norm } => cosine(&|t| mollifier(t / radius) / norm, 0.0, radius),
            Shape::Square { scale, .. } => {
                let g = self.generator_spatial(x).unwrap();
                scale * g * g
            }
        }
    }

    /// Samples of `x -> P(2^m (x - center))` on `grid`, where `P` is the
    /// spatial profile, certified to the band `rho 2^m`.
    pub fn realize<T: Real>(&self, grid: GridSpec, center: [f64; 2], m: i32) -> Result<SampledField<T>> {
        let band = BandSpec::new(m, self.rho);
        if band.radius() > grid.nyquist() {
            return Err(Error::AboveNyquist { radius: band.radius(), nyquist: grid.nyquist() });
        }
        let d = grid.dim() as i32;
        let jac = pow2(-m * d);
        let dil = pow2(-m);
        let mut spec = Spectrum::<T>::zeros(grid);
        let shifted = |xi: [f64; 2], amp: f64| -> Complex<T> {
            let turns = (xi[0] * center[0] + xi[1] * center[1]).rem_euclid(1.0);
            let c = Complex::from_polar(amp, -2.0 * PI * turns);
            Complex::new(T::of(c.re), T::of(c.im))
        };
        for i in 0..grid.len() {
            let xi = grid.frequency(i);
            let r = grid.freq_norm(i) * dil;
            let amp = match self.shape {
                Shape::Square { .. } => self.generator(r).unwrap(),
                _ => self.transform(r),
            };
            if amp != 0.0 {
                spec.coeffs[i] = shifted(xi, jac * amp);
            }
        }
        let field = synthesize(&spec);
        let out = match self.shape {
            Shape::Square { scale, .. } => {
                let s = T::of(scale);
                field.map(|c| Complex::new(c.norm_sqr() * s, T::zero()))
            }
            _ => field,
        };
        Ok(out.with_band(band))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

fn partition_defect() -> f64 {
    // sum over all shells at frequencies spread across many octaves
    let mut worst: f64 = 0.0;
    for i in 0..4000 {
        let xi = 2f64.powf(-12.0 + 24.0 * i as f64 / 4000.0);
        let mut s = father_hat(xi);
        for k in 1..40 {
            s += mother_hat(xi * pow2(-k));
        }
        worst = worst.max((s - 1.0).abs());
    }
    worst
}

/// Littlewood-Paley mother profile: `theta(xi) - theta(2 xi)`, supported in `1/2 <= |xi| <= 2`.
pub fn make_mother() -> FourierProfile {
    let mut p = FourierProfile::build(ProfileKind::Mother, 2.0, Shape::Annulus);
    p.certificates.insert("inner_radius".into(), 0.5);
    p.certificates.insert("partition_defect".into(), partition_defect());
    p
}

/// Father profile `theta`: 1 on the unit ball, supported in radius 2.
pub fn make_father() -> FourierProfile {
    let mut p = FourierProfile::build(ProfileKind::Father, 2.0, Shape::Step(SmoothStep::UNIT));
    p.certificates.insert("plateau_radius".into(), 1.0);
    p
}

/// Reproducing kernel for scale `k`: plateau `2^(k-2)`, support `2^(k-1)`.
pub fn make_reproducing_kernel(k: i32) -> FourierProfile {
    let step = SmoothStep { plateau: pow2(k - 2), support: pow2(k - 1) };
    let mut p = FourierProfile::build(ProfileKind::ReproducingKernel, step.support, Shape::Step(step));
    p.certificates.insert("plateau_radius".into(), step.plateau);
    p.certificates.insert("scale".into(), k as f64);
    p
}

fn square_profile(kind: ProfileKind, rho: f64, scale: f64) -> FourierProfile {
    FourierProfile::build(kind, rho, Shape::Square { half: rho / 2.0, scale })
}

fn min_spatial_on(p: &FourierProfile, half_width: f64) -> f64 {
    (0..=200).map(|i| p.spatial(half_width * i as f64 / 200.0)).fold(f64::INFINITY, f64::min)
}

/// `eta = |g|^2` with transform supported in `|xi| <= 1/100`.
pub fn make_eta() -> FourierProfile {
    make_eta_with_band(0.01)
}

/// The same construction with transform support radius `rho`.
pub fn make_eta_with_band(rho: f64) -> FourierProfile {
    let mut p = square_profile(ProfileKind::Eta, rho, 1.0);
    let c = min_spatial_on(&p, 0.01);
    p.certificates.insert("min_on_unit_cube".into(), c);
    p.certificates.insert("value_at_zero".into(), p.spatial(0.0));
    p
}

/// Plateau `1/100`, support `1/10`.
pub fn make_eta_tilde() -> FourierProfile {
    let step = SmoothStep { plateau: 0.01, support: 0.1 };
    let mut p = FourierProfile::build(ProfileKind::EtaTilde, step.support, Shape::Step(step));
    p.certificates.insert("plateau_radius".into(), step.plateau);
    p
}

/// Compactly supported bump in frequency with `gamma(0) = 1`.
pub fn make_gamma() -> FourierProfile {
    static CACHE: OnceLock<FourierProfile> = OnceLock::new();
    CACHE
        .get_or_init(|| {
            let norm = 2.0 * half_mass();
            let mut p = FourierProfile::build(ProfileKind::Gamma, 1.0, Shape::Bump { radius: 1.0, norm });
            p.certificates.insert("value_at_zero".into(), p.spatial(0.0));
            p.certificates.insert("decay_order".into(), 8.0);
            p.certificates.insert("decay_constant".into(), gamma_decay_constant(&p, 0.125));
            p
        })
        .clone()
}

/// `max |gamma(x)| (1 + |x|)^8` over a scan of `[0, 96]` with the given step.
pub fn gamma_decay_constant(p: &FourierProfile, step: f64) -> f64 {
    let n = (96.0 / step) as usize;
    (0..=n)
        .map(|i| {
            let x = i as f64 * step;
            p.spatial(x).abs() * (1.0 + x).powi(8)
        })
        .fold(0.0, f64::max)
}

/// Largest admissible normalisation for [`make_beta`].
pub const BETA_SCALE_LIMIT: f64 = 1e6;

/// `beta = s |g|^2` with transform in `|xi| <= 1`, normalised so that
/// `beta >= 1` on `|x| <= 2^-m`.
pub fn make_beta(m: u32) -> Result<FourierProfile> {
    let mut p = beta_for_half_width(pow2(-(m as i32)))?;
    p.certificates.insert("cube_exponent".into(), m as f64);
    Ok(p)
}

pub(crate) fn beta_for_half_width(w: f64) -> Result<FourierProfile> {
    let unit = square_profile(ProfileKind::Beta, 1.0, 1.0);
    let min = min_spatial_on(&unit, w);
    let s = 1.0 / min;
    if !(s.is_finite() && s > 0.0) || s > BETA_SCALE_LIMIT {
        return Err(Error::Certificate(format!(
            "beta normalisation {s:e} exceeds {BETA_SCALE_LIMIT:e} for half width {w}"
        )));
    }
    let mut p = square_profile(ProfileKind::Beta, 1.0, s);
    p.certificates.insert("scale".into(), s);
    p.certificates.insert("cube_half_width".into(), w);
    p.certificates.insert("min_on_cube".into(), min_spatial_on(&p, w));
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample_grid::band_check;

    #[test]
    fn step_values() {
        assert_eq!(mollifier_cdf(0.0), 0.5);
        assert_eq!(mollifier_cdf(1.0), 1.0);
        assert!((mollifier_cdf(0.3) + mollifier_cdf(-0.3) - 1.0).abs() < 1e-15);
        assert_eq!(father_hat(1.0), 1.0);
        assert_eq!(father_hat(2.0), 0.0);
        assert_eq!(father_hat(1.5), 0.5);
    }

    #[test]
    fn primitive_matches_fine_quadrature() {
        let fine = GaussLegendre::new(40);
        let z = fine.integrate(-1.0, 1.0, 64, mollifier);
        for &u in &[-0.9, -0.5, -0.1, 0.4, 0.8] {
            let want = fine.integrate(-1.0, u, 64, mollifier) / z;
            assert!((mollifier_cdf(u) - want).abs() < 1e-13, "u={u} {} {want}", mollifier_cdf(u));
        }
    }

    #[test]
    fn mother_partition_of_unity() {
        let m = make_mother();
        assert!(m.certificates["partition_defect"] < 1e-14);
        assert_eq!(m.transform(0.5), 0.0);
        assert_eq!(m.transform(2.0), 0.0);
        assert!(m.transform(1.0) > 0.99);
    }

    #[test]
    fn tabulation_is_smooth_and_vanishes_outside() {
        for p in [make_mother(), make_father(), make_reproducing_kernel(3), make_eta_tilde()] {
            let n = p.samples.len();
            let tail_start = (p.rho / p.sample_spacing).ceil() as usize;
            assert!(p.samples[tail_start..].iter().all(|&v| v == 0.0), "{:?}", p.kind);
            let h = p.sample_spacing;
            let second = (1..n - 1)
                .map(|i| (p.samples[i + 1] - 2.0 * p.samples[i] + p.samples[i - 1]).abs() / (h * h))
                .fold(0.0, f64::max);
            assert!(second * p.rho * p.rho < 200.0, "{:?} curvature {second}", p.kind);
        }
    }

    #[test]
    fn reproducing_kernel_radii() {
        let k = 5;
        let p = make_reproducing_kernel(k);
        assert_eq!(p.transform(pow2(k - 3)), 1.0);
        assert_eq!(p.transform(pow2(k - 2)), 1.0);
        assert_eq!(p.transform(pow2(k - 1)), 0.0);
        assert_eq!(p.transform(pow2(k + 1)), 0.0);
    }

    #[test]
    fn gamma_normalised_and_decaying() {
        let g = make_gamma();
        assert!((g.certificates["value_at_zero"] - 1.0).abs() < 1e-12);
        let c = g.certificates["decay_constant"];
        // a denser scan stays under the fitted constant
        let dense = gamma_decay_constant(&g, 1.0 / 32.0);
        assert!(dense <= 1.01 * c, "{dense} vs {c}");
        for &x in &[100.0, 150.0] {
            assert!(g.spatial(x).abs() <= c * (1.0f64 + x).powi(-8));
        }
    }

    #[test]
    fn eta_certificates() {
        let e = make_eta();
        let c = e.certificates["min_on_unit_cube"];
        assert!(c > 0.0);
        assert!(c <= e.certificates["value_at_zero"]);
        let et = make_eta_tilde();
        assert_eq!(et.transform(0.01), 1.0);
        assert_eq!(et.transform(0.1), 0.0);
    }

    #[test]
    fn beta_normalisation() {
        let b = make_beta(3).unwrap();
        assert!((b.certificates["min_on_cube"] - 1.0).abs() < 1e-9);
        assert!(b.certificates["scale"] < BETA_SCALE_LIMIT);
        assert!(beta_for_half_width(7.0).is_err());
    }

    #[test]
    fn squared_profiles_respect_declared_support() {
        let g = GridSpec::new(1, 3, 512).unwrap();
        for (p, m) in [(make_beta(2).unwrap(), 2), (make_eta_with_band(2.0), 1)] {
            let f = p.realize::<f64>(g, [0.5, 0.0], m).unwrap();
            let frac = band_check(&f, f.band().unwrap()).unwrap();
            assert!(frac <= 1e-12, "{:?}: {frac:e}", p.kind);
            // realisation agrees with the periodised spatial profile
            let y = 0.25;
            let idx = ((0.5 + y) / g.spacing()).round() as usize;
            let per: f64 = (-40..=40).map(|j| p.generator_spatial(pow2(m) * (y + 8.0 * j as f64)).unwrap()).sum();
            let want = p.square_scale().unwrap() * per * per;
            assert!((f.values()[idx].re - want).abs() < 1e-10 * want.abs().max(1.0), "{} {want}", f.values()[idx].re);
        }
    }

    #[test]
    fn squared_transform_is_autocorrelation() {
        let p = make_eta_with_band(1.0);
        // at zero the autocorrelation is the generator's L2 mass
        let mass = rule().integrate(-0.5, 0.5, 16, |t| mollifier(2.0 * t).powi(2));
        assert!((p.transform(0.0) - mass).abs() < 1e-14);
        assert_eq!(p.transform(1.0), 0.0);
    }
}
