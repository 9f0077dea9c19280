//! Growth tables and rate fits shared by the counterexample families.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::stats::linear_fit;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub series: String,
    pub x: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub series: String,
    pub model: String,
    pub exponent: f64,
    /// Exponents the construction predicts, for comparison.
    pub predicted: Vec<f64>,
    pub r2: f64,
}

impl GrowthFit {
    /// Relative distance of the fitted exponent to the first prediction.
    pub fn relative_error(&self) -> Option<f64> {
        self.predicted.first().map(|p| ((self.exponent - p) / p).abs())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub family: String,
    pub params: serde_json::Value,
    pub x_label: String,
    pub rows: Vec<GrowthRow>,
    pub fits: Vec<GrowthFit>,
    pub notes: Vec<String>,
}

impl GrowthReport {
    pub fn series(&self, name: &str) -> Vec<&GrowthRow> {
        self.rows.iter().filter(|r| r.series == name).collect()
    }

    pub fn fit(&self, series: &str, model: &str) -> Option<&GrowthFit> {
        self.fits.iter().find(|f| f.series == series && f.model == model)
    }

    /// Largest over smallest `lhs` in a series.
    pub fn spread(&self, series: &str) -> f64 {
        let v: Vec<f64> = self.series(series).iter().map(|r| r.lhs).collect();
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        hi / lo
    }

    /// One row per table entry; the exponent and R^2 of the first fit of
    /// the row's series are repeated on each of its rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "series,{},lhs,rhs,exponent,r2", self.x_label)?;
        for r in &self.rows {
            let (e, r2) = match self.fits.iter().find(|f| f.series == r.series) {
                Some(f) => (f.exponent.to_string(), f.r2.to_string()),
                None => (String::new(), String::new()),
            };
            writeln!(w, "{},{},{},{},{},{}", r.series, r.x, r.lhs, r.rhs, e, r2)?;
        }
        Ok(())
    }
}

/// Fit `y = a g_gamma(x) + b` with the exponent `gamma` found by golden
/// section search on the residual. Returns `(gamma, a, b, r2)`.
pub fn offset_power_fit<G>(xs: &[f64], ys: &[f64], g: G, lo: f64, hi: f64) -> Option<(f64, f64, f64, f64)>
where
    G: Fn(f64, f64) -> f64,
{
    let sse = |gamma: f64| -> Option<(f64, f64, f64)> {
        let gx: Vec<f64> = xs.iter().map(|&x| g(x, gamma)).collect();
        let fit = linear_fit(&gx, ys)?;
        let e: f64 = gx.iter().zip(ys).map(|(u, y)| (y - fit.slope * u - fit.intercept).powi(2)).sum();
        Some((e, fit.slope, fit.intercept))
    };
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if sse(c)?.0 < sse(d)?.0 {
            b = d;
        } else {
            a = c;
        }
    }
    let gamma = 0.5 * (a + b);
    let (e, s, i) = sse(gamma)?;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    Some((gamma, s, i, if syy > 0.0 { 1.0 - e / syy } else { 1.0 }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exponent_with_offset() {
        let xs: Vec<f64> = (4..=8).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * 2f64.powf(0.7 * x) - 5.0).collect();
        let (gamma, a, b, r2) = offset_power_fit(&xs, &ys, |x, g| 2f64.powf(g * x), 0.01, 4.0).unwrap();
        assert!((gamma - 0.7).abs() < 1e-6, "{gamma}");
        assert!((a - 3.0).abs() < 1e-4 && (b + 5.0).abs() < 1e-3);
        assert!(r2 > 0.999999);
    }
}
