//! Fast internal consistency suite: exact identities and fast engines
//! against their enumeration oracles on small grids.

use std::f64::consts::PI;

use maxlab_core::bump_factory::{father_hat, mother_hat};
use maxlab_core::counterexample_suite::bounded_sum::series_tail;
use maxlab_core::counterexample_suite::{self_similarity_defect, SharpnessFamilySpec};
use maxlab_core::dyadic_norms::v_norm;
use maxlab_core::inequality_lab::{
    apply_multiplier, check_fefferman_stein, fefferman_stein_sides, random_band_field, stream_rng, sub_inequality_sides, Envelope,
    FeffermanSteinConfig, RandomFamilySpec, Symbol,
};
use maxlab_core::lp_decomposition::{sampling_expansion, ScaleSequence};
use maxlab_core::maximal_operators::{brute, hl_maximal, peetre_maximal, peetre_maximal_direct, scale_limited_maximal};
use maxlab_core::real::pow2;
use maxlab_core::sample_grid::{band_check, forward_spectrum, synthesize, BandSpec, GridSpec, SampledField};
use maxlab_core::Result;
use num_complex::Complex;
use serde::Serialize;

/// Outcome of one self-test item.
#[derive(Clone, Debug, Serialize)]
pub struct Item {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Deliberate corruption used to confirm that the suite can fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    None,
    /// Scales the mother profile by `1 + 1e-3`.
    MotherProfile,
}

fn item(name: &str, pass: bool, detail: String) -> Item {
    Item { name: name.into(), pass, detail }
}

fn run_item(name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> Item {
    match f() {
        Ok((pass, detail)) => item(name, pass, detail),
        Err(e) => item(name, false, format!("error: {e}")),
    }
}

fn grid(dim: usize, log2_side: i32, n: usize) -> Result<GridSpec> {
    GridSpec::new(dim, log2_side, n)
}

fn constant(g: GridSpec, c: f64) -> SampledField<f64> {
    SampledField::from_fn(g, |_| Complex::new(c, 0.0))
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn partition_of_unity(fault: Fault) -> Result<(bool, String)> {
    let mother = |r: f64| match fault {
        Fault::None => mother_hat(r),
        Fault::MotherProfile => (1.0 + 1e-3) * mother_hat(r),
    };
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let xi = 2f64.powf(-8.0 + 16.0 * i as f64 / 999.0);
        let s = father_hat(xi) + (1..30).map(|k| mother(xi * pow2(-k))).sum::<f64>();
        worst = worst.max((s - 1.0).abs());
    }
    Ok((worst <= 1e-12, format!("max |sum - 1| = {worst:e} over 1000 radii")))
}

fn fft_against_direct() -> Result<(bool, String)> {
    let g = grid(1, 0, 16)?;
    let mut rng = stream_rng(1, &[0]);
    let f = random_band_field(g, 1, 2.0, Envelope::Flat, &mut rng)?;
    let spec = forward_spectrum(&f);
    let h = g.spacing();
    let mut worst = 0.0f64;
    for p in 0..16 {
        let want: Complex<f64> =
            f.values().iter().enumerate().map(|(j, v)| v * Complex::from_polar(h, -2.0 * PI * (j * p) as f64 / 16.0)).sum();
        worst = worst.max((spec.coeffs[p] - want).norm());
    }
    let back = synthesize(&spec);
    let round: f64 = back.values().iter().zip(f.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let scale = f.max_abs();
    Ok((worst <= 1e-10 * scale && round <= 1e-12 * scale, format!("direct DFT {worst:e}, round trip {round:e}")))
}

fn band_certificate() -> Result<(bool, String)> {
    let g = grid(1, 0, 64)?;
    let mut rng = stream_rng(2, &[0]);
    let f = random_band_field(g, 2, 2.0, Envelope::Flat, &mut rng)?;
    let frac = band_check(&f, f.band().unwrap())?;
    let outside = band_check(&f, BandSpec::new(0, 2.0))?;
    Ok((frac <= 1e-12 && outside > 1e-3, format!("in band {frac:e}, narrower band {outside:e}")))
}

fn maximal_oracles() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    let mut count = 0;
    for (dim, n) in [(1, 8), (1, 32), (2, 8)] {
        let g = grid(dim, 0, n)?;
        for seed in 0..4u64 {
            let mut rng = stream_rng(seed, &[dim as i64, n as i64]);
            let f = random_band_field(g, 0, 1.0, Envelope::Flat, &mut rng)?;
            for r in [0.5, 1.0, 2.0] {
                worst = worst.max(max_diff(&hl_maximal(&f, r)?.values, &brute::hl_maximal(&f, r, false)));
                for (k, eps) in [(0, 0.0), (1, 0.5), (2, 1.0)] {
                    let fast = scale_limited_maximal(&f, r, k, eps)?.values;
                    worst = worst.max(max_diff(&fast, &brute::scale_limited_maximal(&f, r, k, eps, false)?));
                }
            }
            for sigma in [1.0, 2.0] {
                worst = worst.max(max_diff(&peetre_maximal(&f, sigma, 1)?.values, &peetre_maximal_direct(&f, sigma, 1)?.values));
            }
            count += 1;
        }
    }
    Ok((worst == 0.0, format!("{count} fields, largest difference {worst:e}")))
}

fn constants_are_fixed() -> Result<(bool, String)> {
    let g = grid(1, 0, 32)?;
    let f = constant(g, -1.5).certified(BandSpec::new(0, 1.0))?;
    let hl = hl_maximal(&f, 1.0)?.values;
    let sl = scale_limited_maximal(&f, 2.0, 1, 0.5)?.values;
    let pe = peetre_maximal(&f, 2.0, 0)?.values;
    let worst = hl.iter().chain(&pe).map(|v| (v - 1.5).abs()).fold(0.0, f64::max);
    // one window level above 2^-k, damped by 2^-eps, adds to the plain part
    let sl_want = 1.5 * (1.0 + 2f64.powf(-0.5));
    let sl_worst = sl.iter().map(|v| (v - sl_want).abs()).fold(0.0, f64::max);
    Ok((worst <= 1e-14 && sl_worst <= 1e-14, format!("deviations {worst:e} and {sl_worst:e}")))
}

fn unit_ratios() -> Result<(bool, String)> {
    let g = grid(1, 0, 64)?;
    let c = constant(g, 2.0).certified(BandSpec::new(0, 1.0))?;
    let (a, b) = sub_inequality_sides(&c, 3, 1.0)?;
    let (fa, fb) = fefferman_stein_sides(&[c.clone()], 2.0, 2.0, 1.0)?;
    let sub = a / b;
    let fs = fa / fb;
    let ok = (sub - 1.0).abs() <= 1e-12 && (fs - 1.0).abs() <= 1e-12;
    Ok((ok, format!("lattice sum ratio {sub}, vector maximal ratio {fs}")))
}

fn local_norm_of_constant() -> Result<(bool, String)> {
    let g = grid(1, 2, 64)?;
    let c = constant(g, 1.0).certified(BandSpec::new(0, 1.0))?;
    let seq = ScaleSequence::new(0, 1.0, vec![c])?;
    let v = v_norm(&seq, 0, 2.0)?.value;
    Ok(((v - 1.0).abs() <= 1e-12, format!("value {v}")))
}

fn identity_multiplier() -> Result<(bool, String)> {
    let g = grid(1, 0, 64)?;
    let mut rng = stream_rng(3, &[0]);
    let f = random_band_field(g, 2, 2.0, Envelope::Flat, &mut rng)?;
    let tf = apply_multiplier(&Symbol::Identity, &f)?;
    let d: f64 = tf.values().iter().zip(f.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    Ok((d <= 1e-12 * f.max_abs(), format!("largest change {d:e}")))
}

fn sampling_of_constant() -> Result<(bool, String)> {
    let g = grid(1, 0, 64)?;
    let c = constant(g, 1.0).certified(BandSpec::new(0, 0.5))?;
    let err = sampling_expansion(&c, 3)?.max_rel_error;
    Ok((err <= 1e-8, format!("relative error {err:e}")))
}

fn bounded_sum_at_origin() -> Result<(bool, String)> {
    // sum_(k >= 1) (1 + k)^-2 = pi^2 / 6 - 1
    let got = series_tail(0, 1.0, 2.0);
    let want = PI * PI / 6.0 - 1.0;
    Ok(((got - want).abs() <= 1e-12, format!("{got} against {want}")))
}

fn sharpness_periodicity() -> Result<(bool, String)> {
    let d = self_similarity_defect(&SharpnessFamilySpec::default(), 3, 2, 0.5)?;
    Ok((d <= 1e-10, format!("defect {d:e}")))
}

fn determinism() -> Result<(bool, String)> {
    let cfg = FeffermanSteinConfig { log2_n: vec![6, 7], family: RandomFamilySpec { count: 3, ..Default::default() }, ..Default::default() };
    let a = serde_json::to_string(&check_fefferman_stein(&cfg)?)?;
    let b = serde_json::to_string(&check_fefferman_stein(&cfg)?)?;
    Ok((a == b, format!("{} bytes", a.len())))
}

/// Runs every item in a fixed order.
pub fn run(fault: Fault) -> Vec<Item> {
    vec![
        run_item("partition-of-unity", || partition_of_unity(fault)),
        run_item("fft-direct-dft", fft_against_direct),
        run_item("band-certificate", band_certificate),
        run_item("maximal-oracles", maximal_oracles),
        run_item("constant-fixed-points", constants_are_fixed),
        run_item("constant-unit-ratios", unit_ratios),
        run_item("local-norm-constant", local_norm_of_constant),
        run_item("identity-multiplier", identity_multiplier),
        run_item("sampling-constant", sampling_of_constant),
        run_item("bounded-sum-origin", bounded_sum_at_origin),
        run_item("sharpness-periodicity", sharpness_periodicity),
        run_item("determinism", determinism),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_suite_passes() {
        for i in run(Fault::None) {
            assert!(i.pass, "{}: {}", i.name, i.detail);
        }
    }

    #[test]
    fn injected_fault_is_named() {
        let failed: Vec<String> = run(Fault::MotherProfile).into_iter().filter(|i| !i.pass).map(|i| i.name).collect();
        assert_eq!(failed, vec!["partition-of-unity".to_string()]);
    }
}
