//! Overlap-normalized correlation of two equally shaped fluctuation arrays.
//!
//! For every integer displacement `ξ` within the lag window,
//!
//! ```text
//!            Σ a(p) b(p+ξ)
//! C(ξ) = ─────────────────────────────
//!        √( Σ a(p)² · Σ b(p+ξ)² )
//! ```
//!
//! where all sums run over the positions `p` for which both `p` and `p + ξ`
//! lie inside the arrays. No periodic wrap and no zero padding enter the
//! estimate. Cauchy–Schwarz bounds every value by one in magnitude.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft2;

/// Estimator backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Direct summation for small problems, transforms otherwise.
    #[default]
    Auto,
    Direct,
    Fft,
}

/// Work (pixels × lags) above which [`Method::Auto`] switches to transforms.
const AUTO_DIRECT_LIMIT: usize = 40_000_000;

/// Un-normalized correlation sums over a lag window.
///
/// Sums from several frames can be added before normalizing, which gives the
/// ensemble-averaged estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSums {
    pub max_lag: (usize, usize),
    pub cross: Array2<f64>,
    pub energy_a: Array2<f64>,
    pub energy_b: Array2<f64>,
}

impl CorrelationSums {
    pub fn add(&mut self, other: &CorrelationSums) {
        assert_eq!(self.max_lag, other.max_lag, "lag windows differ");
        self.cross += &other.cross;
        self.energy_a += &other.energy_a;
        self.energy_b += &other.energy_b;
    }

    pub fn normalize(&self) -> CorrelationMap {
        let values = ndarray::Zip::from(&self.cross)
            .and(&self.energy_a)
            .and(&self.energy_b)
            .map_collect(|&c, &ea, &eb| {
                let den = (ea * eb).sqrt();
                if den > 0.0 {
                    // Cauchy–Schwarz bounds the ratio; clamp rounding overshoot
                    (c / den).clamp(-1.0, 1.0)
                } else {
                    0.0
                }
            });
        CorrelationMap::new(values, self.max_lag)
    }

    /// Reverse the displacement axis, `ξ → −ξ`.
    pub(crate) fn reversed(mut self) -> Self {
        for arr in [&mut self.cross, &mut self.energy_a, &mut self.energy_b] {
            arr.invert_axis(ndarray::Axis(0));
            arr.invert_axis(ndarray::Axis(1));
        }
        self
    }
}

/// Correlation values over displacements `ξ = (dy, dx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMap {
    /// Shape `(2 Ly + 1, 2 Lx + 1)`; index `(Ly, Lx)` is `ξ = 0`.
    pub values: Array2<f64>,
    pub max_lag: (usize, usize),
    pub peak_value: f64,
    /// Displacement `(dy, dx)` of the maximum.
    pub peak_location: (isize, isize),
}

impl CorrelationMap {
    pub fn new(values: Array2<f64>, max_lag: (usize, usize)) -> Self {
        let mut best = (f64::NEG_INFINITY, (0isize, 0isize));
        for ((r, c), &v) in values.indexed_iter() {
            if v > best.0 {
                best = (v, (r as isize - max_lag.0 as isize, c as isize - max_lag.1 as isize));
            }
        }
        CorrelationMap {
            values,
            max_lag,
            peak_value: best.0,
            peak_location: best.1,
        }
    }

    pub fn at(&self, dy: isize, dx: isize) -> Option<f64> {
        let r = dy + self.max_lag.0 as isize;
        let c = dx + self.max_lag.1 as isize;
        if r < 0 || c < 0 {
            return None;
        }
        self.values.get((r as usize, c as usize)).copied()
    }

    pub fn in_unit_interval(&self) -> bool {
        self.values.iter().all(|v| (-1.0..=1.0).contains(v))
    }
}

pub fn correlation_sums(
    a: ArrayView2<f64>,
    b: ArrayView2<f64>,
    max_lag: (usize, usize),
    method: Method,
) -> Result<CorrelationSums> {
    if a.dim() != b.dim() {
        return Err(Error::Geometry(format!(
            "correlated regions differ in shape: {:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    let (h, w) = a.dim();
    if h == 0 || w == 0 {
        return Err(Error::EmptyRegion);
    }
    let max_lag = (max_lag.0.min(h - 1), max_lag.1.min(w - 1));
    let work = h * w * (2 * max_lag.0 + 1) * (2 * max_lag.1 + 1);
    let use_fft = match method {
        Method::Direct => false,
        Method::Fft => true,
        Method::Auto => work > AUTO_DIRECT_LIMIT,
    };
    Ok(if use_fft {
        sums_fft(a, b, max_lag)
    } else {
        sums_direct(a, b, max_lag)
    })
}

pub fn sums_direct(a: ArrayView2<f64>, b: ArrayView2<f64>, max_lag: (usize, usize)) -> CorrelationSums {
    let (h, w) = a.dim();
    let (ly, lx) = max_lag;
    let shape = (2 * ly + 1, 2 * lx + 1);
    let mut cross = Array2::zeros(shape);
    let mut energy_a = Array2::zeros(shape);
    let mut energy_b = Array2::zeros(shape);
    for iy in 0..shape.0 {
        let dy = iy as isize - ly as isize;
        let (r0, r1) = overlap(h, dy);
        for ix in 0..shape.1 {
            let dx = ix as isize - lx as isize;
            let (c0, c1) = overlap(w, dx);
            let (mut s, mut ea, mut eb) = (0.0, 0.0, 0.0);
            for r in r0..r1 {
                let rb = (r as isize + dy) as usize;
                for c in c0..c1 {
                    let va = a[(r, c)];
                    let vb = b[(rb, (c as isize + dx) as usize)];
                    s += va * vb;
                    ea += va * va;
                    eb += vb * vb;
                }
            }
            cross[(iy, ix)] = s;
            energy_a[(iy, ix)] = ea;
            energy_b[(iy, ix)] = eb;
        }
    }
    CorrelationSums {
        max_lag,
        cross,
        energy_a,
        energy_b,
    }
}

/// Positions `p` in `[0, n)` with `p + d` also in `[0, n)`.
fn overlap(n: usize, d: isize) -> (usize, usize) {
    if d >= 0 {
        (0, n.saturating_sub(d as usize))
    } else {
        ((-d) as usize, n)
    }
}

pub fn sums_fft(a: ArrayView2<f64>, b: ArrayView2<f64>, max_lag: (usize, usize)) -> CorrelationSums {
    let (h, w) = a.dim();
    let (ly, lx) = max_lag;
    let (ph, pw) = (h + ly, w + lx);
    let plan = Fft2::new(ph, pw);
    let embed = |f: &dyn Fn(usize, usize) -> f64| {
        let mut out = Array2::from_elem((ph, pw), Complex64::default());
        for r in 0..h {
            for c in 0..w {
                out[(r, c)] = Complex64::new(f(r, c), 0.0);
            }
        }
        plan.forward_raw(&mut out);
        out
    };
    let fa = embed(&|r, c| a[(r, c)]);
    let fb = embed(&|r, c| b[(r, c)]);
    let fa2 = embed(&|r, c| a[(r, c)].powi(2));
    let fb2 = embed(&|r, c| b[(r, c)].powi(2));
    let fm = embed(&|_, _| 1.0);

    // Σ_p x(p) y(p+ξ) = IFFT(conj(X) · Y)(ξ)
    let correlate = |x: &Array2<Complex64>, y: &Array2<Complex64>| {
        let mut prod = ndarray::Zip::from(x).and(y).map_collect(|u, v| u.conj() * v);
        plan.inverse_raw(&mut prod);
        let shape = (2 * ly + 1, 2 * lx + 1);
        Array2::from_shape_fn(shape, |(iy, ix)| {
            let r = (iy as isize - ly as isize).rem_euclid(ph as isize) as usize;
            let c = (ix as isize - lx as isize).rem_euclid(pw as isize) as usize;
            prod[(r, c)].re
        })
    };
    CorrelationSums {
        max_lag,
        cross: correlate(&fa, &fb),
        energy_a: correlate(&fa2, &fm),
        energy_b: correlate(&fm, &fb2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_bounds() {
        assert_eq!(overlap(5, 0), (0, 5));
        assert_eq!(overlap(5, 2), (0, 3));
        assert_eq!(overlap(5, -2), (2, 5));
        assert_eq!(overlap(5, 7), (0, 0));
    }

    #[test]
    fn direct_and_fft_agree_on_small_case() {
        let a = Array2::from_shape_fn((5, 7), |(r, c)| ((r * 3 + c * 5) % 7) as f64 - 3.0);
        let b = Array2::from_shape_fn((5, 7), |(r, c)| ((r * 2 + c) % 5) as f64 - 2.0);
        let d = sums_direct(a.view(), b.view(), (3, 4)).normalize();
        let f = sums_fft(a.view(), b.view(), (3, 4)).normalize();
        for (x, y) in d.values.iter().zip(f.values.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let a = Array2::<f64>::zeros((3, 3));
        let b = Array2::<f64>::zeros((3, 4));
        assert!(correlation_sums(a.view(), b.view(), (1, 1), Method::Auto).is_err());
    }
}
