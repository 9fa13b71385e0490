//! Row-blocked data-parallel kernels. Reductions accumulate per fixed-size
//! block and then sum the block partials in order, so results are
//! bitwise-identical for any rayon worker count.

use num_complex::Complex64;
use rayon::prelude::*;

pub(crate) const BLOCK: usize = 4096;

pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let partials: Vec<Complex64> = a
        .par_chunks(BLOCK)
        .zip(b.par_chunks(BLOCK))
        .map(|(ca, cb)| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (x, y) in ca.iter().zip(cb) {
                // conj(x)·y
                re += x.re * y.re + x.im * y.im;
                im += x.re * y.im - x.im * y.re;
            }
            Complex64::new(re, im)
        })
        .collect();
    partials.into_iter().fold(Complex64::new(0.0, 0.0), |acc, v| acc + v)
}

pub(crate) fn norm_sq(a: &[Complex64]) -> f64 {
    let partials: Vec<f64> = a
        .par_chunks(BLOCK)
        .map(|c| c.iter().map(|v| v.re * v.re + v.im * v.im).sum::<f64>())
        .collect();
    partials.into_iter().fold(0.0, |acc, v| acc + v)
}
