//! Transverse-momentum grid and its mapping onto detector pixels.
//!
//! Arrays on a grid are stored `[row, col] = [y, x]` with shape `(n_y, n_x)`
//! and are *centered*: the zero-momentum (or on-axis) node sits at index
//! `(n_y / 2, n_x / 2)`.

use std::f64::consts::PI;

use crate::error::{ensure, Error, Result};

/// Discretized far-field momentum grid.
///
/// A single lens of focal length `focal_f` maps transverse momentum `q` to the
/// detector coordinate `x = (λ f / 2π) q`, so one detector pixel of pitch `p`
/// spans `2π p / (λ f)` in momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeGrid {
    pub n_x: usize,
    pub n_y: usize,
    /// Momentum step per grid cell, rad/m.
    pub dq: f64,
    pub focal_f: f64,
    pub pixel_pitch: f64,
    /// Detected (degenerate) wavelength in meters.
    pub wavelength: f64,
}

impl ModeGrid {
    pub fn new(
        n_x: usize,
        n_y: usize,
        dq: f64,
        focal_f: f64,
        pixel_pitch: f64,
        wavelength: f64,
    ) -> Result<Self> {
        let grid = ModeGrid {
            n_x,
            n_y,
            dq,
            focal_f,
            pixel_pitch,
            wavelength,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Grid whose cells tile each detector pixel `bin × bin` times.
    pub fn for_detector(
        n_x: usize,
        n_y: usize,
        bin: usize,
        wavelength: f64,
        focal_f: f64,
        pixel_pitch: f64,
    ) -> Result<Self> {
        ensure(bin >= 1, "bin", || "binning factor must be at least 1".into())?;
        let dq = pixel_q_step(wavelength, focal_f, pixel_pitch) / bin as f64;
        let grid = Self::new(n_x, n_y, dq, focal_f, pixel_pitch, wavelength)?;
        grid.bin_factor()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, n) in [("n_x", self.n_x), ("n_y", self.n_y)] {
            ensure(n >= 2 && n % 2 == 0, name, || {
                format!("grid size must be even and at least 2, got {n}")
            })?;
        }
        ensure(self.dq > 0.0 && self.dq.is_finite(), "dq", || {
            format!("momentum step must be positive, got {}", self.dq)
        })?;
        ensure(self.focal_f > 0.0, "focal_f", || "focal length must be positive".into())?;
        ensure(self.pixel_pitch > 0.0, "pixel_pitch", || {
            "pixel pitch must be positive".into()
        })?;
        ensure(self.wavelength > 0.0, "wavelength", || {
            "wavelength must be positive".into()
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_y, self.n_x)
    }

    pub fn len(&self) -> usize {
        self.n_x * self.n_y
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Momentum components `(q_x, q_y)` of the cell at `[row, col]`.
    pub fn q_at(&self, row: usize, col: usize) -> (f64, f64) {
        (
            (col as f64 - (self.n_x / 2) as f64) * self.dq,
            (row as f64 - (self.n_y / 2) as f64) * self.dq,
        )
    }

    /// Index of the cell holding `-q` for the cell at `[row, col]`.
    ///
    /// The most negative row/column has no positive partner on an even grid and
    /// wraps onto itself, matching the periodicity of the discrete transform.
    pub fn mirror_index(&self, row: usize, col: usize) -> (usize, usize) {
        ((self.n_y - row) % self.n_y, (self.n_x - col) % self.n_x)
    }

    /// Position-space step of the near field conjugate to this grid.
    pub fn dx(&self) -> f64 {
        2.0 * PI / (self.n_x as f64 * self.dq)
    }

    pub fn dy(&self) -> f64 {
        2.0 * PI / (self.n_y as f64 * self.dq)
    }

    /// Near-field position `(x, y)` of the cell at `[row, col]`.
    pub fn rho_at(&self, row: usize, col: usize) -> (f64, f64) {
        (
            (col as f64 - (self.n_x / 2) as f64) * self.dx(),
            (row as f64 - (self.n_y / 2) as f64) * self.dy(),
        )
    }

    /// Largest |q| on the grid (a corner cell).
    pub fn q_max(&self) -> f64 {
        let qx = (self.n_x / 2) as f64 * self.dq;
        let qy = (self.n_y / 2) as f64 * self.dq;
        qx.hypot(qy)
    }

    /// Detector-plane coordinate of momentum `q`.
    pub fn q_to_x(&self, q: f64) -> f64 {
        self.wavelength * self.focal_f / (2.0 * PI) * q
    }

    pub fn x_to_q(&self, x: f64) -> f64 {
        2.0 * PI * x / (self.wavelength * self.focal_f)
    }

    /// Momentum spanned by one detector pixel.
    pub fn pixel_dq(&self) -> f64 {
        pixel_q_step(self.wavelength, self.focal_f, self.pixel_pitch)
    }

    /// Number of grid cells per detector pixel along each axis.
    ///
    /// Fails unless the pixel momentum span is an integer multiple of `dq` and
    /// that multiple divides both grid dimensions.
    pub fn bin_factor(&self) -> Result<usize> {
        let ratio = self.pixel_dq() / self.dq;
        let bin = ratio.round();
        if bin < 1.0 || (ratio - bin).abs() > 1e-6 * ratio.max(1.0) {
            return Err(Error::Geometry(format!(
                "pixel spans {ratio:.6} grid cells; must be a positive integer"
            )));
        }
        let bin = bin as usize;
        if self.n_x % bin != 0 || self.n_y % bin != 0 {
            return Err(Error::Geometry(format!(
                "grid {}x{} is not divisible into {bin}x{bin} pixel bins",
                self.n_x, self.n_y
            )));
        }
        Ok(bin)
    }
}

/// Momentum increment per detector pixel, `2π p / (λ f)`.
pub fn pixel_q_step(wavelength: f64, focal_f: f64, pixel_pitch: f64) -> f64 {
    2.0 * PI * pixel_pitch / (wavelength * focal_f)
}
