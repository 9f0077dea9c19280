//! The scale-separated series `sum_k (1 + |2^-k x - k^alpha|)^-M` and its
//! unscaled contrast `sum_k (1 + |x - k^alpha|)^-M`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::stats::{linear_fit, LinearFit};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundedSumConfig {
    pub alpha: f64,
    pub m: f64,
    /// The scan covers `[0, 2^n n^alpha]` for `n = top_scale`.
    pub top_scale: u32,
    /// Points per octave of the geometric scan.
    pub per_octave: usize,
    /// Allow `M <= 1 / alpha`, where the series is expected to be unbounded.
    pub probe: bool,
    /// Contrast series scanned on `[0, X]` for each `X` here.
    pub contrast_ranges: Vec<f64>,
}

impl Default for BoundedSumConfig {
    fn default() -> Self {
        Self { alpha: 1.0, m: 2.0, top_scale: 60, per_octave: 64, probe: false, contrast_ranges: vec![16.0, 32.0, 64.0, 128.0, 256.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundedSumReport {
    pub params: BoundedSumConfig,
    pub sup: f64,
    pub argmax: f64,
    /// Explicit terms summed beyond the scan's top scale.
    pub head_terms: usize,
    /// Upper bound on what the x-independent tail replacement can miss.
    pub tail_error: f64,
    pub profile: Vec<[f64; 2]>,
    /// `(X, sup of the contrast series on [0, X])`.
    pub contrast: Vec<[f64; 2]>,
    /// Fit of `log2 sup` against `log2 X` for the contrast series.
    pub contrast_trend: Option<LinearFit>,
}

fn term(x: f64, k: f64, alpha: f64, m: f64) -> f64 {
    (1.0 + (x - k.powf(alpha)).abs()).powf(-m)
}

/// `sum_(k > from) (1 + k^alpha)^-M`, direct up to `2^20` and by quadrature
/// in logarithmic variables beyond. Needs `alpha M > 1`.
pub fn series_tail(from: u64, alpha: f64, m: f64) -> f64 {
    let cut: u64 = 1 << 20;
    let f = |t: f64| (1.0 + t.powf(alpha)).powf(-m);
    if from >= cut {
        return tail_integral(from as f64 + 0.5, alpha, m);
    }
    // small terms first
    let direct: f64 = (from + 1..=cut).rev().map(|k| f(k as f64)).sum();
    direct + tail_integral(cut as f64 + 0.5, alpha, m)
}

// midpoint-corrected integral of (1 + t^alpha)^-M over [a, inf)
fn tail_integral(a: f64, alpha: f64, m: f64) -> f64 {
    let rule = GaussLegendre::new(24);
    let decay = alpha * m - 1.0;
    let span = 60.0 / decay;
    rule.integrate(0.0, span, 64, |u| {
        let t = a * u.exp();
        (1.0 + t.powf(alpha)).powf(-m) * t
    })
}

/// Value of the scale-separated series at `x`. Terms up to the first scale
/// far beyond `x` are summed explicitly; the rest are replaced by the
/// x-independent tail `tail`.
fn scaled_series(x: f64, alpha: f64, m: f64, head: u64, tail: f64) -> f64 {
    let mut s = 0.0;
    for k in (1..=head).rev() {
        s += term(x * (-(k as f64)).exp2(), k as f64, alpha, m);
    }
    s + tail
}

/// Scans the scale-separated series over a geometric grid and the contrast
/// series over the configured ranges.
pub fn bounded_sum_probe(cfg: &BoundedSumConfig) -> Result<BoundedSumReport> {
    if !(cfg.alpha > 0.0 && cfg.m > 0.0) {
        return Err(Error::InvalidParameter("alpha and M must be positive".into()));
    }
    let convergent = cfg.alpha * cfg.m > 1.0;
    if !convergent && !cfg.probe {
        return Err(Error::HypothesisViolated(format!("M = {} <= 1/alpha = {}", cfg.m, 1.0 / cfg.alpha)));
    }
    if cfg.top_scale > 900 || cfg.per_octave == 0 {
        return Err(Error::InvalidParameter("top scale must be at most 900 and the scan nonempty".into()));
    }
    let n = cfg.top_scale as f64;
    let x_max = n.exp2() * n.powf(cfg.alpha);
    let head = cfg.top_scale as u64 + 64;
    let (tail, tail_error) = if convergent {
        // beyond the head, 2^-k x < 2^-64 n^alpha so each term moves by a relative M 2^-64 n^alpha
        let t = series_tail(head, cfg.alpha, cfg.m);
        (t, t * cfg.m * n.powf(cfg.alpha) * (-64f64).exp2())
    } else {
        (0.0, f64::INFINITY)
    };
    let mut xs = vec![0.0];
    let octaves = x_max.log2().ceil() as i64 + 4;
    for i in 0..=(octaves as usize * cfg.per_octave) {
        let x = (-4.0 + i as f64 / cfg.per_octave as f64).exp2();
        if x <= x_max {
            xs.push(x);
        }
    }
    // peaks of the individual terms
    xs.extend((1..=cfg.top_scale).map(|k| (k as f64).exp2() * (k as f64).powf(cfg.alpha)));
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    let profile: Vec<[f64; 2]> = xs.iter().map(|&x| [x, scaled_series(x, cfg.alpha, cfg.m, head, tail)]).collect();
    let (argmax, sup) = profile.iter().fold((0.0, f64::NEG_INFINITY), |b, p| if p[1] > b.1 { (p[0], p[1]) } else { b });
    let contrast = contrast_sups(cfg)?;
    let lx: Vec<f64> = contrast.iter().map(|c| c[0].log2()).collect();
    let ly: Vec<f64> = contrast.iter().map(|c| c[1].log2()).collect();
    Ok(BoundedSumReport {
        params: cfg.clone(),
        sup,
        argmax,
        head_terms: head as usize,
        tail_error,
        profile,
        contrast_trend: linear_fit(&lx, &ly),
        contrast,
    })
}

/// Contrast series at `x`: terms with `|k^alpha - x| <= 32` explicitly,
/// the rest by midpoint-corrected integrals. Needs `alpha M > 1`.
pub fn contrast_series(x: f64, alpha: f64, m: f64) -> f64 {
    const REACH: f64 = 32.0;
    let rule = GaussLegendre::new(24);
    let inv = 1.0 / alpha;
    let k_lo = ((x - REACH).max(0.0).powf(inv).ceil() as u64).max(1);
    let k_hi = (x + REACH).powf(inv).floor() as u64;
    let near: f64 = (k_lo..=k_hi).map(|k| term(x, k as f64, alpha, m)).sum();
    // t = (x + s)^(1/alpha), so dt = (x + s)^(1/alpha - 1) ds / alpha
    let s0 = (k_hi as f64 + 0.5).powf(alpha) - x;
    let decay = alpha * m - 1.0;
    let above = rule.integrate(0.0, 60.0 * alpha.max(1.0) / decay + 8.0, 64, |u| {
        let s = s0 * u.exp();
        (1.0 + s).powf(-m) * (x + s).powf(inv - 1.0) * inv * s
    });
    let below = if k_lo > 1 {
        rule.integrate(0.5, k_lo as f64 - 0.5, 64, |t| term(x, t, alpha, m))
    } else {
        0.0
    };
    near + above + below
}

fn contrast_sups(cfg: &BoundedSumConfig) -> Result<Vec<[f64; 2]>> {
    let mut out = Vec::new();
    let mut best = 0.0f64;
    let mut ranges = cfg.contrast_ranges.clone();
    ranges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if cfg.alpha * cfg.m <= 1.0 {
        return Ok(out);
    }
    let mut x = 0.0;
    let step = 1.0 / 16.0;
    for &top in &ranges {
        if !(top > 0.0) || (top + 32.0).powf(1.0 / cfg.alpha) > 1e8 {
            return Err(Error::InvalidParameter(format!("contrast range {top} too large")));
        }
        while x <= top {
            best = best.max(contrast_series(x, cfg.alpha, cfg.m));
            x += step;
        }
        out.push([top, best]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_at_origin_is_the_plain_sum() {
        let (alpha, m) = (1.0, 2.0);
        let head = 100;
        let tail = series_tail(head, alpha, m);
        let got = scaled_series(0.0, alpha, m, head, tail);
        // independent: direct summation to 10^7 and the integral remainder of 1/(1+t)^2
        let direct: f64 = (1..=10_000_000u64).rev().map(|k| (1.0 + k as f64).powi(-2)).sum();
        let want = direct + 1.0 / (1.0 + 10_000_000.5);
        assert!((got - want).abs() < 1e-12, "{got} {want}");
    }

    #[test]
    fn refuses_divergent_parameters_unless_probing() {
        let cfg = BoundedSumConfig { alpha: 0.5, m: 1.5, ..Default::default() };
        assert!(matches!(bounded_sum_probe(&cfg), Err(Error::HypothesisViolated(_))));
        let cfg = BoundedSumConfig { probe: true, top_scale: 20, contrast_ranges: vec![4.0], ..cfg };
        assert!(bounded_sum_probe(&cfg).unwrap().tail_error.is_infinite());
    }
}
