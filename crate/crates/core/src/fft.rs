//! Two-dimensional transforms on centered, row-major grids.

use std::sync::Arc;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Cached unitary 2D FFT plans for one array shape.
///
/// Both directions treat the array as *centered* (origin at `(n_y/2, n_x/2)`),
/// so a field centered in position space maps to a spectrum centered in
/// momentum space.
pub struct Fft2 {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish()
    }
}

impl Fft2 {
    pub fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            rows,
            cols,
            row_fwd: planner.plan_fft_forward(cols),
            row_inv: planner.plan_fft_inverse(cols),
            col_fwd: planner.plan_fft_forward(rows),
            col_inv: planner.plan_fft_inverse(rows),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn forward_centered(&self, data: &mut Array2<Complex64>) {
        self.centered(data, true);
    }

    pub fn inverse_centered(&self, data: &mut Array2<Complex64>) {
        self.centered(data, false);
    }

    /// Plain (origin at index 0), unnormalized forward transform.
    pub fn forward_raw(&self, data: &mut Array2<Complex64>) {
        self.transform(data, true);
    }

    /// Plain inverse transform, scaled by `1/N` so that it undoes [`Fft2::forward_raw`].
    pub fn inverse_raw(&self, data: &mut Array2<Complex64>) {
        self.transform(data, false);
        let scale = 1.0 / (self.rows * self.cols) as f64;
        data.mapv_inplace(|v| v * scale);
    }

    fn centered(&self, data: &mut Array2<Complex64>, forward: bool) {
        shift(data);
        self.transform(data, forward);
        shift(data);
        let scale = 1.0 / ((self.rows * self.cols) as f64).sqrt();
        data.mapv_inplace(|v| v * scale);
    }

    fn transform(&self, data: &mut Array2<Complex64>, forward: bool) {
        assert_eq!(data.dim(), (self.rows, self.cols), "array shape does not match plan");
        let (row_plan, col_plan) = if forward {
            (&self.row_fwd, &self.col_fwd)
        } else {
            (&self.row_inv, &self.col_inv)
        };
        let mut buf = vec![Complex64::default(); self.rows.max(self.cols)];
        for mut row in data.axis_iter_mut(Axis(0)) {
            let line = &mut buf[..self.cols];
            line.iter_mut().zip(row.iter()).for_each(|(b, v)| *b = *v);
            row_plan.process(line);
            row.iter_mut().zip(line.iter()).for_each(|(v, b)| *v = *b);
        }
        for mut col in data.axis_iter_mut(Axis(1)) {
            let line = &mut buf[..self.rows];
            line.iter_mut().zip(col.iter()).for_each(|(b, v)| *b = *v);
            col_plan.process(line);
            col.iter_mut().zip(line.iter()).for_each(|(v, b)| *v = *b);
        }
    }
}

/// Swap half-planes along both axes. Self-inverse for even dimensions.
pub fn shift<T: Copy>(data: &mut Array2<T>) {
    let (rows, cols) = data.dim();
    let (hr, hc) = (rows / 2, cols / 2);
    let src = data.clone();
    for ((r, c), v) in data.indexed_iter_mut() {
        *v = src[((r + hr) % rows, (c + hc) % cols)];
    }
}
