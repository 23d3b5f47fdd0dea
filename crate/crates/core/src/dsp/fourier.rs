//! Unnormalized forward DFT and `1/N`-scaled inverse, any length.
//!
//! Backed by `rustfft` (mixed radix, so N = 200 needs no padding). Plans are
//! cached per thread.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// In-place forward transform, `X[k] = sum_n x[n] e^{-j 2 pi k n / N}`.
pub fn dft_in_place(buf: &mut [Complex64]) {
    if buf.len() > 1 {
        plan(buf.len(), false).process(buf);
    }
}

/// In-place inverse transform including the `1/N` factor.
pub fn idft_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    if n > 1 {
        plan(n, true).process(buf);
        let scale = 1.0 / n as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }
}

pub fn dft(values: &[Complex64]) -> Vec<Complex64> {
    let mut buf = values.to_vec();
    dft_in_place(&mut buf);
    buf
}

pub fn idft(values: &[Complex64]) -> Vec<Complex64> {
    let mut buf = values.to_vec();
    idft_in_place(&mut buf);
    buf
}
