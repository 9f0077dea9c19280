//! Littlewood-Paley projections, the sampling expansion and sequences of
//! band-limited fields indexed by scale.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::bump_factory::{father_hat, make_reproducing_kernel, mother_hat};
use crate::error::{Error, Result};
use crate::real::{pow2, Real};
use crate::sample_grid::{forward_spectrum, synthesize, BandSpec, GridSpec, SampledField, Spectrum};

/// Shared forward spectrum from which many shells can be cut.
#[derive(Clone, Debug)]
pub struct Decomposer<T: Real> {
    spectrum: Spectrum<T>,
}

impl<T: Real> Decomposer<T> {
    pub fn new(f: &SampledField<T>) -> Self {
        Self { spectrum: forward_spectrum(f) }
    }

    pub fn grid(&self) -> GridSpec {
        self.spectrum.grid
    }

    /// Homogeneous shell `k`, band `2^(k+1)`.
    pub fn shell(&self, k: i32) -> Result<SampledField<T>> {
        self.cut(BandSpec::new(k, 2.0), |r| mother_hat(r * pow2(-k)))
    }

    /// Inhomogeneous shell `k >= 0`; shell 0 is the father projection.
    pub fn inhomog_shell(&self, k: i32) -> Result<SampledField<T>> {
        if k < 0 {
            return Err(Error::InvalidParameter(format!("inhomogeneous shell {k} < 0")));
        }
        if k == 0 {
            self.cut(BandSpec::new(0, 2.0), father_hat)
        } else {
            self.shell(k)
        }
    }

    fn cut<F: Fn(f64) -> f64>(&self, band: BandSpec, m: F) -> Result<SampledField<T>> {
        let g = self.grid();
        if band.radius() > g.nyquist() {
            return Err(Error::AboveNyquist { radius: band.radius(), nyquist: g.nyquist() });
        }
        let mut s = self.spectrum.clone();
        s.apply_radial(m);
        Ok(synthesize(&s).with_band(band))
    }
}

/// `Pi_k f`: the homogeneous Littlewood-Paley piece at scale `k`.
pub fn project<T: Real>(f: &SampledField<T>, k: i32) -> Result<SampledField<T>> {
    Decomposer::new(f).shell(k)
}

/// `Lambda_k f`: inhomogeneous piece, father projection at `k = 0`.
pub fn inhomog_project<T: Real>(f: &SampledField<T>, k: i32) -> Result<SampledField<T>> {
    Decomposer::new(f).inhomog_shell(k)
}

/// Reconstruction of a field from its values on the dyadic lattice.
#[derive(Clone, Debug)]
pub struct SamplingExpansion<T: Real> {
    pub field: SampledField<T>,
    /// `max |reconstruction - f| / max |f|`.
    pub max_rel_error: f64,
}

/// Rebuilds `f` from `f(x_Q)`, `Q` of side `2^-k`, with the reproducing kernel for `k`.
///
/// Needs `f` certified to radius `2^(k-2)` and spacing at most `2^(-k-2)`.
pub fn sampling_expansion<T: Real>(f: &SampledField<T>, k: i32) -> Result<SamplingExpansion<T>> {
    let g = f.grid();
    let band = f.band().ok_or(Error::Uncertified)?;
    let limit = pow2(k - 2);
    if band.radius() > limit * (1.0 + 1e-12) {
        return Err(Error::HypothesisViolated(format!(
            "band radius {} exceeds 2^(k-2) = {limit}",
            band.radius()
        )));
    }
    let required = pow2(-k - 2);
    if g.spacing() > required {
        return Err(Error::InsufficientResolution { spacing: g.spacing(), required });
    }
    if k < g.coarsest_level() {
        return Err(Error::InvalidParameter(format!("cubes of side 2^{} do not tile the torus", -k)));
    }
    let step = 1usize << (g.finest_level() - k);
    let weight = T::of(pow2(-k * g.dim() as i32) / g.cell_volume());
    let mut comb = SampledField::<T>::zeros(g).into_values();
    for (i, v) in f.values().iter().enumerate() {
        let m = g.multi_index(i);
        if m[0] % step == 0 && m[1] % step == 0 {
            comb[i] = v * weight;
        }
    }
    let comb = SampledField::new(g, comb)?;
    let kernel = make_reproducing_kernel(k);
    let mut spec = forward_spectrum(&comb);
    spec.apply_radial(|r| kernel.transform(r));
    let rebuilt = synthesize(&spec).with_band(BandSpec::new(k - 1, 1.0));
    let scale = f.max_abs().f64();
    let err = rebuilt
        .values()
        .iter()
        .zip(f.values())
        .map(|(a, b)| (a - b).norm().f64())
        .fold(0.0, f64::max);
    let max_rel_error = if scale > 0.0 { err / scale } else { err };
    Ok(SamplingExpansion { field: rebuilt, max_rel_error })
}

/// Fields `f_mu, f_(mu+1), ...` on one grid, each in `E(a 2^k)`
/// (band radius at most `2 a 2^k`).
#[derive(Clone, Debug, PartialEq)]
pub struct ScaleSequence<T: Real> {
    base: i32,
    a: f64,
    fields: Vec<SampledField<T>>,
}

impl<T: Real> ScaleSequence<T> {
    pub fn new(base: i32, a: f64, fields: Vec<SampledField<T>>) -> Result<Self> {
        let Some(first) = fields.first() else {
            return Err(Error::InvalidParameter("empty scale sequence".into()));
        };
        let grid = first.grid();
        for (i, f) in fields.iter().enumerate() {
            let k = base + i as i32;
            if f.grid() != grid {
                return Err(Error::GridMismatch(format!("entry {k} lives on a different grid")));
            }
            let band = f.band().ok_or(Error::Uncertified)?;
            let allowed = 2.0 * a * pow2(k);
            if band.radius() > allowed * (1.0 + 1e-12) {
                return Err(Error::HypothesisViolated(format!(
                    "entry {k} has band radius {} above {allowed}",
                    band.radius()
                )));
            }
        }
        Ok(Self { base, a, fields })
    }

    pub fn grid(&self) -> GridSpec {
        self.fields[0].grid()
    }

    pub fn base(&self) -> i32 {
        self.base
    }

    pub fn top(&self) -> i32 {
        self.base + self.fields.len() as i32 - 1
    }

    pub fn band_factor(&self) -> f64 {
        self.a
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn get(&self, k: i32) -> Option<&SampledField<T>> {
        if k < self.base {
            return None;
        }
        self.fields.get((k - self.base) as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, &SampledField<T>)> {
        self.fields.iter().enumerate().map(move |(i, f)| (self.base + i as i32, f))
    }

    /// Entries with `k >= from`.
    pub fn tail(&self, from: i32) -> Result<Self> {
        let skip = (from - self.base).max(0) as usize;
        if skip >= self.fields.len() {
            return Err(Error::InvalidParameter(format!("no entries at or above scale {from}")));
        }
        Ok(Self { base: self.base + skip as i32, a: self.a, fields: self.fields[skip..].to_vec() })
    }

    pub fn to_json(&self) -> Result<String> {
        let wire = SequenceWire {
            base: self.base,
            a: self.a,
            fields: self.fields.iter().map(|f| f.to_json()).collect::<Result<Vec<_>>>()?,
        };
        Ok(serde_json::to_string(&wire)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let wire: SequenceWire = serde_json::from_str(s)?;
        let fields = wire.fields.iter().map(|f| SampledField::from_json(f)).collect::<Result<Vec<_>>>()?;
        Self::new(wire.base, wire.a, fields)
    }
}

#[derive(Serialize, Deserialize)]
struct SequenceWire {
    base: i32,
    a: f64,
    fields: Vec<String>,
}

/// `sum_k shells` as a single field (used to rebuild a field from its pieces).
pub fn sum_fields<T: Real>(fields: &[SampledField<T>]) -> Result<SampledField<T>> {
    let first = fields.first().ok_or_else(|| Error::InvalidParameter("nothing to sum".into()))?;
    let mut acc = vec![Complex::new(T::zero(), T::zero()); first.grid().len()];
    for f in fields {
        if f.grid() != first.grid() {
            return Err(Error::GridMismatch("summands on different grids".into()));
        }
        for (a, v) in acc.iter_mut().zip(f.values()) {
            *a = *a + v;
        }
    }
    SampledField::new(first.grid(), acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn smooth_field(g: GridSpec) -> SampledField<f64> {
        let l = g.side();
        SampledField::from_fn(g, |x| {
            let t = 2.0 * PI * x[0] / l;
            Complex::new((t).cos() + 0.3 * (5.0 * t).sin() + 0.1 * (17.0 * t).cos(), 0.2 * (3.0 * t).sin())
        })
    }

    #[test]
    fn telescoping_reconstructs_field() {
        // Lambda_0 + sum_k Pi_k recovers every frequency below the top band
        let g = GridSpec::new(1, 0, 256).unwrap();
        let f = smooth_field(g);
        let dec = Decomposer::new(&f);
        let mut pieces = vec![dec.inhomog_shell(0).unwrap()];
        for k in 1..=g.max_shell() {
            pieces.push(dec.shell(k).unwrap());
        }
        let total = sum_fields(&pieces).unwrap();
        for (a, b) in total.values().iter().zip(f.values()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn inhomog_one_equals_project_one() {
        let g = GridSpec::new(1, 0, 64).unwrap();
        let f = smooth_field(g);
        assert_eq!(inhomog_project(&f, 1).unwrap(), project(&f, 1).unwrap());
    }

    #[test]
    fn project_refuses_above_nyquist() {
        let g = GridSpec::new(1, 0, 64).unwrap();
        let f = smooth_field(g);
        assert!(project(&f, 4).is_ok());
        assert!(matches!(project(&f, 5), Err(Error::AboveNyquist { .. })));
    }

    #[test]
    fn projections_are_band_limited() {
        let g = GridSpec::new(2, 0, 32).unwrap();
        let f = SampledField::<f64>::from_fn(g, |x| Complex::new((x[0] * 40.0).sin() * x[1], x[0]));
        for k in 0..=g.max_shell() {
            let p = project(&f, k).unwrap();
            let frac = crate::sample_grid::band_check(&p, p.band().unwrap()).unwrap();
            assert!(frac < 1e-28, "k={k} {frac:e}");
        }
    }

    #[test]
    fn sampling_expansion_of_constant() {
        let g = GridSpec::new(1, 0, 64).unwrap();
        let one = SampledField::<f64>::from_fn(g, |_| Complex::new(1.0, 0.0)).certified(BandSpec::new(0, 0.0)).unwrap();
        let e = sampling_expansion(&one, 2).unwrap();
        assert!(e.max_rel_error < 1e-12);
    }

    #[test]
    fn sampling_expansion_reconstructs_band_limited_field() {
        let g = GridSpec::new(2, 0, 64).unwrap();
        let k = 4;
        let raw = SampledField::<f64>::from_fn(g, |x| Complex::new((x[0] * 9.0).sin() + (x[1] * 13.0).cos(), x[0] * x[1]));
        let mut s = forward_spectrum(&raw);
        s.apply_radial(|r| if r <= 4.0 { 1.0 } else { 0.0 });
        let f = synthesize(&s).certified(BandSpec::new(k - 2, 1.0)).unwrap();
        let e = sampling_expansion(&f, k).unwrap();
        assert!(e.max_rel_error <= 1e-12, "{}", e.max_rel_error);
    }

    #[test]
    fn sampling_expansion_checks_resolution() {
        let g = GridSpec::new(1, 0, 16).unwrap();
        let f = SampledField::<f64>::zeros(g).certified(BandSpec::new(1, 1.0)).unwrap();
        assert!(matches!(sampling_expansion(&f, 3), Err(Error::InsufficientResolution { .. })));
    }

    #[test]
    fn sequence_validates_bands() {
        let g = GridSpec::new(1, 0, 64).unwrap();
        let f = smooth_field(g);
        let dec = Decomposer::new(&f);
        let shells: Vec<_> = (1..=3).map(|k| dec.shell(k).unwrap()).collect();
        let seq = ScaleSequence::new(1, 1.0, shells.clone()).unwrap();
        assert_eq!(seq.top(), 3);
        assert!(ScaleSequence::new(0, 1.0, shells).is_err());
        let back = ScaleSequence::<f64>::from_json(&seq.to_json().unwrap()).unwrap();
        assert_eq!(back, seq);
        assert_eq!(seq.tail(2).unwrap().base(), 2);
    }
}
