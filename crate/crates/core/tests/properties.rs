use approx::assert_relative_eq;
use maxlab_core::maximal_operators::{hl_maximal, peetre_maximal, scale_limited_maximal};
use maxlab_core::sample_grid::{forward_spectrum, synthesize, GridSpec, SampledField};
use maxlab_core::{SampledField32, SampledField64};
use num_complex::Complex;
use proptest::prelude::*;

fn field(dim: usize, log2_side: i32, n: usize, re: &[f64], im: &[f64]) -> SampledField64 {
    let g = GridSpec::new(dim, log2_side, n).unwrap();
    SampledField::new(g, re.iter().zip(im).map(|(&a, &b)| Complex::new(a, b)).collect()).unwrap()
}

fn samples(len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(-10.0..10.0f64, len), prop::collection::vec(-10.0..10.0f64, len))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval_and_round_trip((re, im) in samples(64), log2_side in -2i32..3) {
        let f = field(1, log2_side, 64, &re, &im);
        let spec = forward_spectrum(&f);
        let l2 = f.lp_norm(2.0);
        assert_relative_eq!(spec.energy(), f.grid().volume() * l2 * l2, max_relative = 1e-12);
        let back = synthesize(&spec);
        for (a, b) in back.values().iter().zip(f.values()) {
            prop_assert!((a - b).norm() <= 1e-12 * (1.0 + f.max_abs()));
        }
    }

    #[test]
    fn hl_dominates_modulus_and_grows_with_r((re, im) in samples(32)) {
        let f = field(1, 0, 32, &re, &im);
        let abs = f.abs();
        let m1 = hl_maximal(&f, 1.0).unwrap().values;
        let m2 = hl_maximal(&f, 2.0).unwrap().values;
        let mh = hl_maximal(&f, 0.5).unwrap().values;
        for i in 0..abs.len() {
            prop_assert!(m1[i] >= abs[i] * (1.0 - 1e-12));
            prop_assert!(mh[i] <= m1[i] * (1.0 + 1e-12));
            prop_assert!(m1[i] <= m2[i] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn hl_is_sublinear_and_homogeneous((re, im) in samples(64), (re2, im2) in samples(64), c in -5.0..5.0f64) {
        let f = field(2, 0, 8, &re, &im);
        let g = field(2, 0, 8, &re2, &im2);
        let sum = f.zip_map(&g, |a, b| a + b).unwrap();
        let scaled = f.map(|a| a * c);
        let mf = hl_maximal(&f, 1.0).unwrap().values;
        let mg = hl_maximal(&g, 1.0).unwrap().values;
        let ms = hl_maximal(&sum, 1.0).unwrap().values;
        let mc = hl_maximal(&scaled, 1.0).unwrap().values;
        for i in 0..mf.len() {
            prop_assert!(ms[i] <= (mf[i] + mg[i]) * (1.0 + 1e-12));
            assert_relative_eq!(mc[i], c.abs() * mf[i], max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn penalised_scales_shrink_with_eps((re, im) in samples(32), k in 0i32..4) {
        let f = field(1, 0, 32, &re, &im);
        let small = scale_limited_maximal(&f, 1.0, k, 1.0).unwrap().values;
        let large = scale_limited_maximal(&f, 1.0, k, 0.25).unwrap().values;
        for (s, l) in small.iter().zip(&large) {
            prop_assert!(*s <= l * (1.0 + 1e-12));
        }
    }

    #[test]
    fn peetre_dominates_modulus_and_shrinks_with_sigma((re, im) in samples(32)) {
        let f = field(1, 0, 32, &re, &im);
        let abs = f.abs();
        let p1 = peetre_maximal(&f, 1.0, 2).unwrap().values;
        let p3 = peetre_maximal(&f, 3.0, 2).unwrap().values;
        for i in 0..abs.len() {
            prop_assert!(p3[i] >= abs[i] * (1.0 - 1e-12));
            prop_assert!(p3[i] <= p1[i] * (1.0 + 1e-12));
        }
    }
}

#[test]
fn single_precision_tracks_double() {
    let g = GridSpec::new(1, 0, 64).unwrap();
    let wave = |x: [f64; 2]| (2.0 * std::f64::consts::PI * 3.0 * x[0]).cos();
    let f64_field = SampledField64::from_fn(g, |x| Complex::new(wave(x), 0.0));
    let f32_field = SampledField32::from_fn(g, |x| Complex::new(wave(x) as f32, 0.0));
    let a = hl_maximal(&f64_field, 2.0).unwrap().values;
    let b = hl_maximal(&f32_field, 2.0).unwrap().values;
    for (x, y) in a.iter().zip(&b) {
        assert_relative_eq!(*x, *y as f64, max_relative = 1e-5);
    }
}
