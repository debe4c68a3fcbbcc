//! FFT plumbing shared by the propagators and the guidance fields.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid1D;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Unnormalized forward transform in place.
pub fn forward(data: &mut [C64]) {
    plan(data.len(), false).process(data);
}

/// Inverse transform in place, scaled by 1/n.
pub fn inverse(data: &mut [C64]) {
    let n = data.len();
    plan(n, true).process(data);
    let s = 1.0 / n as f64;
    data.iter_mut().for_each(|v| *v *= s);
}

/// Transforms every contiguous row of a row-major `rows x cols` array.
pub fn forward_rows(data: &mut [C64], cols: usize) {
    let f = plan(cols, false);
    data.chunks_exact_mut(cols).for_each(|row| f.process(row));
}

pub fn inverse_rows(data: &mut [C64], cols: usize) {
    let f = plan(cols, true);
    let s = 1.0 / cols as f64;
    for row in data.chunks_exact_mut(cols) {
        f.process(row);
        row.iter_mut().for_each(|v| *v *= s);
    }
}

/// Transforms every column of a row-major `rows x cols` array.
pub fn forward_cols(data: &mut [C64], rows: usize, cols: usize) {
    map_cols(data, rows, cols, |col| forward(col));
}

pub fn inverse_cols(data: &mut [C64], rows: usize, cols: usize) {
    map_cols(data, rows, cols, |col| inverse(col));
}

fn map_cols(data: &mut [C64], rows: usize, cols: usize, mut f: impl FnMut(&mut [C64])) {
    let mut col = vec![C64::new(0.0, 0.0); rows];
    for c in 0..cols {
        for r in 0..rows {
            col[r] = data[r * cols + c];
        }
        f(&mut col);
        for r in 0..rows {
            data[r * cols + c] = col[r];
        }
    }
}

/// Multiplier for d/dx in FFT order; the Nyquist mode is dropped so that real
/// input gives real output.
pub fn derivative_symbol(grid: &Grid1D) -> Vec<C64> {
    let n = grid.len();
    grid.wavenumbers()
        .into_iter()
        .enumerate()
        .map(|(i, k)| if i == n / 2 { C64::new(0.0, 0.0) } else { C64::new(0.0, k) })
        .collect()
}

pub fn derivative(values: &[C64], grid: &Grid1D) -> Vec<C64> {
    let mut work = values.to_vec();
    forward(&mut work);
    for (w, s) in work.iter_mut().zip(derivative_symbol(grid)) {
        *w *= s;
    }
    inverse(&mut work);
    work
}

pub fn derivative_real(values: &[f64], grid: &Grid1D) -> Vec<f64> {
    let c: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
    derivative(&c, grid).into_iter().map(|v| v.re).collect()
}

/// Derivative along the second (fastest-varying) index of a row-major array.
pub fn derivative_rows(values: &[C64], grid: &Grid1D) -> Vec<C64> {
    let mut work = values.to_vec();
    let n = grid.len();
    forward_rows(&mut work, n);
    let sym = derivative_symbol(grid);
    for row in work.chunks_exact_mut(n) {
        for (w, s) in row.iter_mut().zip(&sym) {
            *w *= s;
        }
    }
    inverse_rows(&mut work, n);
    work
}

/// Derivative along the first index of a row-major array.
pub fn derivative_cols(values: &[C64], grid: &Grid1D, cols: usize) -> Vec<C64> {
    let mut work = values.to_vec();
    let rows = grid.len();
    forward_cols(&mut work, rows, cols);
    let sym = derivative_symbol(grid);
    for (r, row) in work.chunks_exact_mut(cols).enumerate() {
        row.iter_mut().for_each(|w| *w *= sym[r]);
    }
    inverse_cols(&mut work, rows, cols);
    work
}

/// Trigonometric interpolant of real periodic samples.
#[derive(Clone, Debug)]
pub struct TrigInterpolant {
    origin: f64,
    coeffs: Vec<C64>,
    wavenumbers: Vec<f64>,
}

impl TrigInterpolant {
    pub fn new(values: &[f64], grid: &Grid1D) -> Self {
        let mut c: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
        forward(&mut c);
        let n = c.len() as f64;
        c.iter_mut().for_each(|v| *v /= n);
        Self {
            origin: grid.origin(),
            coeffs: c,
            wavenumbers: grid.wavenumbers(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.coeffs.len();
        let s = x - self.origin;
        let mut acc = 0.0;
        for (i, (c, k)) in self.coeffs.iter().zip(&self.wavenumbers).enumerate() {
            if i == n / 2 {
                // split Nyquist term symmetrically
                acc += c.re * (k * s).cos();
            } else {
                let (sin, cos) = (k * s).sin_cos();
                acc += c.re * cos - c.im * sin;
            }
        }
        acc
    }
}
