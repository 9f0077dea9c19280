//! Thin wrapper over rustfft for one and two dimensional periodic arrays.

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::real::Real;

/// In-place unnormalised transform of a row-major `n^dim` array.
/// Forward uses `exp(-2 pi i ...)`, inverse `exp(+2 pi i ...)`.
pub(crate) fn transform<T: Real>(data: &mut [Complex<T>], n: usize, dim: usize, inverse: bool) {
    let mut planner = FftPlanner::<T>::new();
    let plan = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    match dim {
        1 => plan.process(data),
        2 => {
            // rows are contiguous
            plan.process(data);
            let mut col = vec![Complex::new(T::zero(), T::zero()); n];
            for c in 0..n {
                for r in 0..n {
                    col[r] = data[r * n + c];
                }
                plan.process(&mut col);
                for r in 0..n {
                    data[r * n + c] = col[r];
                }
            }
        }
        _ => unreachable!("dimension validated by GridSpec"),
    }
}
