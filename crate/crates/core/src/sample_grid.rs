//! Periodic sample grids, band certificates and the spectral transforms
//! everything else is built on.
//!
//! A grid is the torus `[0, L)^d` with `L = 2^J`, sampled at `N` points per
//! axis. Fields are stored row-major, first axis slowest. Spectra follow the
//! FFT ordering: position `p` carries the integer frequency `p` for
//! `p < N/2` and `p - N` otherwise; the physical frequency is `n / L`.

use std::io::Write;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::real::{pow2, Real};

/// Geometry of a sampled torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GridWire", into = "GridWire")]
pub struct GridSpec {
    dim: usize,
    log2_side: i32,
    n: usize,
}

#[derive(Serialize, Deserialize)]
struct GridWire {
    d: usize,
    #[serde(rename = "L")]
    side: f64,
    #[serde(rename = "N")]
    n: usize,
}

impl TryFrom<GridWire> for GridSpec {
    type Error = Error;

    fn try_from(w: GridWire) -> Result<Self> {
        if !(w.side > 0.0) || w.side.log2().fract() != 0.0 {
            return Err(Error::InvalidGrid(format!("side {} is not a power of two", w.side)));
        }
        GridSpec::new(w.d, w.side.log2() as i32, w.n)
    }
}

impl From<GridSpec> for GridWire {
    fn from(g: GridSpec) -> Self {
        GridWire { d: g.dim, side: g.side(), n: g.n }
    }
}

impl GridSpec {
    pub fn new(dim: usize, log2_side: i32, n: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension {dim} unsupported")));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("N = {n} must be a power of two >= 2")));
        }
        if !(-60..=60).contains(&log2_side) {
            return Err(Error::InvalidGrid(format!("side 2^{log2_side} out of range")));
        }
        Ok(Self { dim, log2_side, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn log2_side(&self) -> i32 {
        self.log2_side
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn log2_n(&self) -> i32 {
        self.n.trailing_zeros() as i32
    }

    pub fn side(&self) -> f64 {
        pow2(self.log2_side)
    }

    pub fn spacing(&self) -> f64 {
        pow2(self.log2_side - self.log2_n())
    }

    /// Number of samples, `N^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest representable frequency magnitude per axis, `N / (2L)`.
    pub fn nyquist(&self) -> f64 {
        pow2(self.log2_n() - 1 - self.log2_side)
    }

    /// Dyadic level of a single sample cell (`h = 2^-level`).
    pub fn finest_level(&self) -> i32 {
        self.log2_n() - self.log2_side
    }

    /// Dyadic level of the whole torus.
    pub fn coarsest_level(&self) -> i32 {
        -self.log2_side
    }

    /// Highest Littlewood-Paley shell whose band `2^(k+1)` fits below Nyquist.
    pub fn max_shell(&self) -> i32 {
        self.log2_n() - 2 - self.log2_side
    }

    /// Same samples on a torus `2^m` times larger.
    pub fn dilate(&self, m: i32) -> Result<Self> {
        Self::new(self.dim, self.log2_side + m, self.n)
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 2] {
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx / self.n, idx % self.n]
        }
    }

    pub fn flat(&self, i: [usize; 2]) -> usize {
        if self.dim == 1 {
            i[0]
        } else {
            i[0] * self.n + i[1]
        }
    }

    /// Physical coordinates of sample `idx`.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let h = self.spacing();
        let m = self.multi_index(idx);
        [m[0] as f64 * h, if self.dim == 2 { m[1] as f64 * h } else { 0.0 }]
    }

    /// Integer frequency carried by FFT position `p` on one axis.
    pub fn freq_index(&self, p: usize) -> i64 {
        if p < self.n / 2 {
            p as i64
        } else {
            p as i64 - self.n as i64
        }
    }

    /// Physical frequency vector of spectrum position `idx`.
    pub fn frequency(&self, idx: usize) -> [f64; 2] {
        let m = self.multi_index(idx);
        let inv = pow2(-self.log2_side);
        let f0 = self.freq_index(m[0]) as f64 * inv;
        let f1 = if self.dim == 2 { self.freq_index(m[1]) as f64 * inv } else { 0.0 };
        [f0, f1]
    }

    /// Euclidean norm of the physical frequency at spectrum position `idx`.
    pub fn freq_norm(&self, idx: usize) -> f64 {
        let f = self.frequency(idx);
        (f[0] * f[0] + f[1] * f[1]).sqrt()
    }

    /// Squared integer frequency norm at spectrum position `idx`.
    fn freq_index_norm2(&self, idx: usize) -> f64 {
        let m = self.multi_index(idx);
        let a = self.freq_index(m[0]) as f64;
        let b = if self.dim == 2 { self.freq_index(m[1]) as f64 } else { 0.0 };
        a * a + b * b
    }

    /// Volume of one sample cell, `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.side().powi(self.dim as i32)
    }
}

/// Declared frequency support: the ball of radius `a * 2^k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub k: i32,
    #[serde(rename = "A")]
    pub a: f64,
}

impl BandSpec {
    pub fn new(k: i32, a: f64) -> Self {
        Self { k, a }
    }

    pub fn radius(&self) -> f64 {
        self.a * pow2(self.k)
    }
}

/// Complex samples on a grid, optionally carrying a band certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledField<T: Real> {
    grid: GridSpec,
    values: Vec<Complex<T>>,
    band: Option<BandSpec>,
}

/// Fourier coefficients `h^d * DFT(values)` in FFT order.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<T: Real> {
    pub grid: GridSpec,
    pub coeffs: Vec<Complex<T>>,
}

impl<T: Real> SampledField<T> {
    pub fn new(grid: GridSpec, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} samples",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values, band: None })
    }

    pub fn from_real(grid: GridSpec, values: &[T]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| Complex::new(v, T::zero())).collect())
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, values: vec![Complex::new(T::zero(), T::zero()); grid.len()], band: None }
    }

    /// Samples `f` at every grid point.
    pub fn from_fn<F: FnMut([f64; 2]) -> Complex<T>>(grid: GridSpec, mut f: F) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self { grid, values, band: None }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    pub fn band(&self) -> Option<BandSpec> {
        self.band
    }

    pub fn is_certified(&self) -> bool {
        self.band.is_some()
    }

    /// Runs [`band_check`] and attaches the certificate when it passes.
    pub fn certified(mut self, band: BandSpec) -> Result<Self> {
        let fraction = band_check(&self, band)?;
        if fraction > T::BAND_TOL {
            return Err(Error::NotBandLimited { radius: band.radius(), fraction });
        }
        self.band = Some(band);
        Ok(self)
    }

    /// Attaches a certificate known to hold by construction.
    pub(crate) fn with_band(mut self, band: BandSpec) -> Self {
        self.band = Some(band);
        self
    }

    pub fn drop_band(mut self) -> Self {
        self.band = None;
        self
    }

    /// Moduli of the samples.
    pub fn abs(&self) -> Vec<T> {
        self.values.iter().map(|c| c.norm()).collect()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, c| m.max(c.norm()))
    }

    /// Riemann-sum `L^p` norm over the torus (`p = inf` gives the sup norm).
    pub fn lp_norm(&self, p: f64) -> T {
        lp_norm_of(&self.abs(), self.grid, p)
    }

    /// Pointwise combination with another field on the same grid; drops the certificate.
    pub fn zip_map<F: FnMut(Complex<T>, Complex<T>) -> Complex<T>>(&self, other: &Self, mut f: F) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, values, band: None })
    }

    pub fn map<F: FnMut(Complex<T>) -> Complex<T>>(&self, f: F) -> Self {
        Self { grid: self.grid, values: self.values.iter().copied().map(f).collect(), band: None }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&FieldWire::from_field(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let w: FieldWire = serde_json::from_str(s)?;
        w.into_field()
    }

    /// Writes `x0[,x1],re,im` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        if self.grid.dim == 1 {
            writeln!(w, "x0,re,im")?;
        } else {
            writeln!(w, "x0,x1,re,im")?;
        }
        for (i, v) in self.values.iter().enumerate() {
            let p = self.grid.point(i);
            if self.grid.dim == 1 {
                writeln!(w, "{},{},{}", p[0], v.re, v.im)?;
            } else {
                writeln!(w, "{},{},{},{}", p[0], p[1], v.re, v.im)?;
            }
        }
        Ok(())
    }
}

/// Riemann-sum `L^p` norm of nonnegative samples.
pub fn lp_norm_of<T: Real>(abs: &[T], grid: GridSpec, p: f64) -> T {
    if p.is_infinite() {
        return abs.iter().fold(T::zero(), |m, &v| m.max(v));
    }
    let pt = T::of(p);
    let s: T = abs.iter().map(|&v| v.powf(pt)).sum();
    (s * T::of(grid.cell_volume())).powf(T::one() / pt)
}

#[derive(Serialize, Deserialize)]
struct FieldWire {
    #[serde(flatten)]
    grid: GridSpec,
    band: Option<BandSpec>,
    values: Vec<[f64; 2]>,
}

impl FieldWire {
    fn from_field<T: Real>(f: &SampledField<T>) -> Self {
        Self {
            grid: f.grid,
            band: f.band,
            values: f.values.iter().map(|c| [c.re.f64(), c.im.f64()]).collect(),
        }
    }

    fn into_field<T: Real>(self) -> Result<SampledField<T>> {
        let values = self.values.iter().map(|v| Complex::new(T::of(v[0]), T::of(v[1]))).collect();
        let field = SampledField::new(self.grid, values)?;
        // certificates are re-verified rather than trusted
        match self.band {
            Some(b) => field.certified(b),
            None => Ok(field),
        }
    }
}

/// Fourier coefficients of `field`.
pub fn forward_spectrum<T: Real>(field: &SampledField<T>) -> Spectrum<T> {
    let g = field.grid;
    let mut data = field.values.clone();
    fft::transform(&mut data, g.n, g.dim, false);
    let scale = T::of(g.cell_volume());
    for c in &mut data {
        *c = *c * scale;
    }
    Spectrum { grid: g, coeffs: data }
}

/// Samples of the trigonometric polynomial with the given coefficients.
pub fn synthesize<T: Real>(spec: &Spectrum<T>) -> SampledField<T> {
    let g = spec.grid;
    let mut data = spec.coeffs.clone();
    fft::transform(&mut data, g.n, g.dim, true);
    let scale = T::of(1.0 / g.volume());
    for c in &mut data {
        *c = *c * scale;
    }
    SampledField { grid: g, values: data, band: None }
}

impl<T: Real> Spectrum<T> {
    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, coeffs: vec![Complex::new(T::zero(), T::zero()); grid.len()] }
    }

    /// Multiplies every coefficient by `m(xi)`.
    pub fn apply<F: FnMut([f64; 2]) -> Complex<T>>(&mut self, mut m: F) {
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            *c = *c * m(self.grid.frequency(i));
        }
    }

    /// Multiplies every coefficient by a real radial multiplier `m(|xi|)`.
    pub fn apply_radial<F: FnMut(f64) -> f64>(&mut self, mut m: F) {
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            let v = m(self.grid.freq_norm(i));
            *c = if v == 0.0 { Complex::new(T::zero(), T::zero()) } else { c.scale(T::of(v)) };
        }
    }

    pub fn energy(&self) -> T {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Fraction of spectral energy outside the ball of radius `band.radius()`.
///
/// Errors when the radius exceeds the Nyquist limit of the grid.
pub fn band_check<T: Real>(field: &SampledField<T>, band: BandSpec) -> Result<f64> {
    let g = field.grid;
    let radius = band.radius();
    if !(radius >= 0.0) || radius > g.nyquist() {
        return Err(Error::AboveNyquist { radius, nyquist: g.nyquist() });
    }
    let spec = forward_spectrum(field);
    // compare in integer frequency units, where the threshold is usually exact
    let rl = radius * g.side();
    let limit = rl * rl * (1.0 + 1e-12);
    let mut total = 0.0;
    let mut outside = 0.0;
    for (i, c) in spec.coeffs.iter().enumerate() {
        let e = c.norm_sqr().f64();
        total += e;
        if g.freq_index_norm2(i) > limit {
            outside += e;
        }
    }
    Ok(if total > 0.0 { outside / total } else { 0.0 })
}

/// Band-limited interpolant of a certified field.
#[derive(Clone, Debug)]
pub struct Interpolant<T: Real> {
    field: SampledField<T>,
    spectrum: Spectrum<T>,
}

impl<T: Real> Interpolant<T> {
    pub fn new(field: &SampledField<T>) -> Result<Self> {
        if field.band.is_none() {
            return Err(Error::Uncertified);
        }
        Ok(Self { field: field.clone(), spectrum: forward_spectrum(field) })
    }

    /// Value at an arbitrary point; grid points return the stored sample.
    pub fn eval(&self, x: &[f64]) -> Complex<T> {
        let g = self.field.grid;
        let h = g.spacing();
        let l = g.side();
        let mut on_grid = [0usize; 2];
        let mut all_on = true;
        for a in 0..g.dim {
            let t = x[a].rem_euclid(l) / h;
            let r = t.round();
            if (t - r).abs() <= 1e-12 * t.abs().max(1.0) {
                on_grid[a] = (r as usize) % g.n;
            } else {
                all_on = false;
            }
        }
        if all_on {
            return self.field.values[g.flat(on_grid)];
        }
        let factors: Vec<Vec<Complex<T>>> = (0..g.dim).map(|a| axis_phases(g, x[a])).collect();
        let mut acc = Complex::new(T::zero(), T::zero());
        if g.dim == 1 {
            for (c, e) in self.spectrum.coeffs.iter().zip(&factors[0]) {
                acc = acc + c * e;
            }
        } else {
            for p0 in 0..g.n {
                let mut row = Complex::new(T::zero(), T::zero());
                for p1 in 0..g.n {
                    row = row + self.spectrum.coeffs[p0 * g.n + p1] * factors[1][p1];
                }
                acc = acc + row * factors[0][p0];
            }
        }
        acc.scale(T::of(1.0 / g.volume()))
    }
}

// exp(2 pi i n x / L) per FFT position; the Nyquist bin uses the real cosine
// so real band-limited data interpolate to real values.
fn axis_phases<T: Real>(g: GridSpec, x: f64) -> Vec<Complex<T>> {
    let l = g.side();
    (0..g.n)
        .map(|p| {
            let n = g.freq_index(p);
            let turns = (n as f64 * x / l).rem_euclid(1.0);
            let ang = 2.0 * std::f64::consts::PI * turns;
            if n == -(g.n as i64) / 2 {
                Complex::new(T::of(ang.cos()), T::zero())
            } else {
                Complex::new(T::of(ang.cos()), T::of(ang.sin()))
            }
        })
        .collect()
}

/// Band-limited interpolation of a certified field at one point.
pub fn evaluate_offgrid<T: Real>(field: &SampledField<T>, x: &[f64]) -> Result<Complex<T>> {
    if x.len() != field.grid.dim {
        return Err(Error::InvalidParameter(format!("point has {} coordinates", x.len())));
    }
    Ok(Interpolant::new(field)?.eval(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tone(grid: GridSpec, m: f64) -> SampledField<f64> {
        let l = grid.side();
        SampledField::from_fn(grid, |x| Complex::from_polar(1.0, 2.0 * PI * m * x[0] / l))
    }

    #[test]
    fn tone_spectrum_is_single_coefficient() {
        let g = GridSpec::new(1, 0, 16).unwrap();
        let s = forward_spectrum(&tone(g, 3.0));
        for (p, c) in s.coeffs.iter().enumerate() {
            let want = if p == 3 { 1.0 } else { 0.0 };
            assert!((c.re - want).abs() < 1e-14 && c.im.abs() < 1e-14, "p={p} {c}");
        }
    }

    #[test]
    fn band_check_of_tone() {
        let g = GridSpec::new(1, 0, 16).unwrap();
        let f = tone(g, 3.0);
        assert!(band_check(&f, BandSpec::new(2, 1.0)).unwrap() < 1e-28);
        assert!((band_check(&f, BandSpec::new(1, 1.0)).unwrap() - 1.0).abs() < 1e-14);
        assert!(matches!(band_check(&f, BandSpec::new(4, 1.0)), Err(Error::AboveNyquist { .. })));
    }

    #[test]
    fn round_trip_2d() {
        let g = GridSpec::new(2, 1, 16).unwrap();
        let f = SampledField::<f64>::from_fn(g, |x| Complex::new((x[0] * 3.1).sin() + x[1], x[0] * x[1]));
        let back = synthesize(&forward_spectrum(&f));
        let scale = f.max_abs();
        for (a, b) in f.values().iter().zip(back.values()) {
            assert!((a - b).norm() <= 1e-13 * scale);
        }
    }

    #[test]
    fn offgrid_recovers_tone_between_samples() {
        let g = GridSpec::new(1, 1, 32).unwrap();
        let f = tone(g, 5.0).certified(BandSpec::new(2, 1.0)).unwrap();
        let x = 0.123_456;
        let v = evaluate_offgrid(&f, &[x]).unwrap();
        let want = Complex::from_polar(1.0, 2.0 * PI * 5.0 * x / 2.0);
        assert!((v - want).norm() < 1e-13);
    }

    #[test]
    fn offgrid_rejects_uncertified() {
        let g = GridSpec::new(1, 0, 8).unwrap();
        let f = SampledField::<f64>::zeros(g);
        assert!(matches!(evaluate_offgrid(&f, &[0.3]), Err(Error::Uncertified)));
    }

    #[test]
    fn json_round_trip_reverifies_band() {
        let g = GridSpec::new(1, -2, 16).unwrap();
        let f = tone(g, 2.0).certified(BandSpec::new(3, 1.0)).unwrap();
        let back = SampledField::<f64>::from_json(&f.to_json().unwrap()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn grid_geometry() {
        let g = GridSpec::new(1, -3, 64).unwrap();
        assert_eq!(g.spacing(), 1.0 / 512.0);
        assert_eq!(g.nyquist(), 256.0);
        assert_eq!(g.max_shell(), 7);
        assert!(GridSpec::new(3, 0, 8).is_err());
        assert!(GridSpec::new(1, 0, 12).is_err());
    }
}
