use ndarray::Array2;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal, Poisson};

use super::{FarFieldIntensity, SimModel};
use crate::error::{ensure, Error, Result};
use crate::grid::ModeGrid;
use crate::seed;

/// How continuous photon-number estimates become integer counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integerization {
    /// Round to the nearest integer. Symmetric-ordered samples already carry
    /// shot noise, so no extra counting noise is added.
    #[default]
    Round,
    /// Poisson draw with the continuous value as mean.
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    pub quantum_efficiency_eta: f64,
    /// RMS read noise, electrons per pixel.
    pub read_noise_electrons: f64,
    /// Sensor size as `(columns, rows)`.
    pub ccd_shape: (usize, usize),
    pub pixel_pitch: f64,
    pub integerization: Integerization,
}

impl Default for DetectorParams {
    /// Princeton Pixis 400BR: 1340 × 400 pixels of 20 μm, 80 % QE, 5 e⁻ read noise.
    fn default() -> Self {
        DetectorParams {
            quantum_efficiency_eta: 0.8,
            read_noise_electrons: 5.0,
            ccd_shape: (1340, 400),
            pixel_pitch: 20e-6,
            integerization: Integerization::Round,
        }
    }
}

impl DetectorParams {
    /// Unit efficiency, no read noise.
    pub fn transparent() -> Self {
        DetectorParams {
            quantum_efficiency_eta: 1.0,
            read_noise_electrons: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let eta = self.quantum_efficiency_eta;
        ensure((0.0..=1.0).contains(&eta), "eta", || {
            format!("quantum efficiency must be in [0, 1], got {eta}")
        })?;
        ensure(self.read_noise_electrons >= 0.0, "read_noise", || {
            "read noise must be non-negative".into()
        })?;
        ensure(self.pixel_pitch > 0.0, "pixel_pitch", || "pixel pitch must be positive".into())
    }
}

/// Placement of the two far-field images on the sensor.
///
/// The signal image fills rows `[0, block_rows)`. The idler image fills rows
/// `[block_rows, 2 block_rows)` and is point-reflected, so the idler pixel
/// twin of signal pixel `p` sits at `2 · symmetry_center − p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameGeometry {
    pub grid: ModeGrid,
    pub bin: usize,
    pub block_rows: usize,
    pub cols: usize,
    /// `(row, col)` of the reflection center, in pixel-center coordinates.
    pub symmetry_center: (f64, f64),
    /// `(row, col)` of zero momentum within the signal image.
    pub signal_q0: (f64, f64),
}

impl FrameGeometry {
    pub fn new(grid: ModeGrid) -> Result<Self> {
        let bin = grid.bin_factor()?;
        let block_rows = grid.n_y / bin;
        let cols = grid.n_x / bin;
        let q0 = |n: usize| ((n / 2) as f64 + 0.5) / bin as f64 - 0.5;
        Ok(FrameGeometry {
            grid,
            bin,
            block_rows,
            cols,
            symmetry_center: (block_rows as f64 - 0.5, (cols as f64 - 1.0) / 2.0),
            signal_q0: (q0(grid.n_y), q0(grid.n_x)),
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (2 * self.block_rows, self.cols)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameMeta {
    pub g: f64,
    pub waist_wp: f64,
    pub peak_power: f64,
    pub seed: u64,
    pub frame_index: u64,
    pub model: SimModel,
    pub temporal_modes: usize,
}

/// One detected shot: integer counts plus geometry and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub counts: Array2<u32>,
    pub geometry: FrameGeometry,
    pub meta: FrameMeta,
}

impl Frame {
    pub fn rows(&self) -> usize {
        self.counts.nrows()
    }

    pub fn cols(&self) -> usize {
        self.counts.ncols()
    }

    pub fn mean_count(&self) -> f64 {
        self.counts.iter().map(|&v| v as f64).sum::<f64>() / self.counts.len().max(1) as f64
    }

    /// Counts as floating point, for analysis.
    pub fn values(&self) -> Array2<f64> {
        self.counts.mapv(f64::from)
    }
}

/// Detect `M` temporal-mode realizations as one frame.
pub fn detect(
    modes: &[FarFieldIntensity],
    grid: &ModeGrid,
    detector: &DetectorParams,
    seed: u64,
    meta: FrameMeta,
) -> Result<Frame> {
    ensure(!modes.is_empty(), "temporal_modes", || "need at least one temporal mode".into())?;
    let mut total = FarFieldIntensity::zeros(grid.shape());
    for m in modes {
        if m.signal.dim() != grid.shape() || m.idler.dim() != grid.shape() {
            return Err(Error::Geometry("intensity array does not match grid".into()));
        }
        total.accumulate(m);
    }
    detect_accumulated(&total, grid, detector, seed, meta)
}

pub(crate) fn detect_accumulated(
    total: &FarFieldIntensity,
    grid: &ModeGrid,
    detector: &DetectorParams,
    seed: u64,
    meta: FrameMeta,
) -> Result<Frame> {
    detector.validate()?;
    if (grid.pixel_pitch - detector.pixel_pitch).abs() > 1e-12 {
        return Err(Error::Geometry(format!(
            "grid assumes {} m pixels, detector has {} m",
            grid.pixel_pitch, detector.pixel_pitch
        )));
    }
    let geometry = FrameGeometry::new(*grid)?;
    let (rows, cols) = geometry.shape();
    if cols > detector.ccd_shape.0 || rows > detector.ccd_shape.1 {
        return Err(Error::Geometry(format!(
            "frame {cols}x{rows} exceeds sensor {}x{}",
            detector.ccd_shape.0, detector.ccd_shape.1
        )));
    }

    let bin = geometry.bin;
    let mirrored = Array2::from_shape_fn(grid.shape(), |(r, c)| total.idler[grid.mirror_index(r, c)]);
    let signal_px = bin_cells(&total.signal, bin);
    let idler_px = bin_cells(&mirrored, bin);

    let mut photons = Array2::<f64>::zeros((rows, cols));
    let br = geometry.block_rows;
    for ((r, c), &v) in signal_px.indexed_iter() {
        photons[(r, c)] = v;
        photons[(2 * br - 1 - r, cols - 1 - c)] = idler_px[(r, c)];
    }

    let mut rng = seed::rng(seed, &[]);
    let read = Normal::new(0.0, detector.read_noise_electrons)
        .map_err(|e| Error::InvalidParameter { name: "read_noise", reason: e.to_string() })?;
    let eta = detector.quantum_efficiency_eta;
    let counts = photons.mapv(|mean| {
        let n = integerize(mean, detector.integerization, &mut rng);
        let detected = if eta >= 1.0 {
            n
        } else if eta <= 0.0 || n == 0 {
            0
        } else {
            Binomial::new(n, eta).expect("valid binomial").sample(&mut rng)
        };
        let noisy = if detector.read_noise_electrons > 0.0 {
            detected as f64 + read.sample(&mut rng).round()
        } else {
            detected as f64
        };
        noisy.clamp(0.0, u32::MAX as f64) as u32
    });
    Ok(Frame {
        counts,
        geometry,
        meta,
    })
}

fn integerize<R: Rng + ?Sized>(mean: f64, mode: Integerization, rng: &mut R) -> u64 {
    let mean = mean.max(0.0);
    match mode {
        Integerization::Round => mean.round() as u64,
        Integerization::Poisson if mean > 0.0 => {
            Poisson::new(mean).expect("positive mean").sample(rng) as u64
        }
        Integerization::Poisson => 0,
    }
}

/// Sum `bin × bin` blocks of cells into pixels.
pub(crate) fn bin_cells(cells: &Array2<f64>, bin: usize) -> Array2<f64> {
    let (rows, cols) = cells.dim();
    let mut out = Array2::zeros((rows / bin, cols / bin));
    for ((r, c), &v) in cells.indexed_iter() {
        out[(r / bin, c / bin)] += v;
    }
    out
}
