//! Stochastic generation of signal/idler far-field intensities and detector frames.
//!
//! Fields are sampled in the symmetric (Wigner) representation: every input
//! mode carries complex Gaussian vacuum noise with `⟨|a|²⟩ = 1/2`, the linear
//! parametric transformation is applied to each realization, and photon
//! numbers are read out as `|a|² − 1/2`. Intensity moments of these samples
//! reproduce symmetrically ordered quantum moments.
//!
//! [`FieldOrdering::Normal`] instead samples each beam from its (positive)
//! Glauber P distribution, which drops the vacuum floor. That removes the
//! zero-lag noise spike from single-beam speckle statistics at low gain, at
//! the price of losing the quantum signal-idler correlation.

mod detector;
mod propagate;

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{ensure, Result};
use crate::fft::Fft2;
use crate::grid::ModeGrid;
use crate::kernel::{CrystalParams, DetuningModel, PumpParams};
use crate::seed;

pub use detector::{detect, DetectorParams, Frame, FrameGeometry, FrameMeta, Integerization};
pub use propagate::{bogoliubov_pair, simulate_diagonal, simulate_split_step, MAX_STEP_GAIN};

/// One transverse complex amplitude array on a [`ModeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub grid: ModeGrid,
    pub values: Array2<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: ModeGrid) -> Self {
        ComplexField {
            values: Array2::from_elem(grid.shape(), Complex64::default()),
            grid,
        }
    }

    /// Independent complex Gaussian amplitudes with `⟨|a|²⟩ = variance`.
    pub fn gaussian<R: Rng + ?Sized>(grid: ModeGrid, variance: f64, rng: &mut R) -> Self {
        let sd = (variance / 2.0).sqrt();
        let values = Array2::from_shape_simple_fn(grid.shape(), || {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(sd * re, sd * im)
        });
        ComplexField { grid, values }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// Vacuum input for one temporal mode: independent signal and idler noise.
pub fn sample_vacuum(grid: ModeGrid, seed: u64) -> (ComplexField, ComplexField) {
    let mut rng = seed::rng(seed, &[]);
    let signal = ComplexField::gaussian(grid, 0.5, &mut rng);
    let idler = ComplexField::gaussian(grid, 0.5, &mut rng);
    (signal, idler)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimModel {
    /// Mode-by-mode two-mode squeezing of the `(q, −q)` pairs.
    DiagonalBogoliubov,
    /// Split-step propagation through the Gaussian-pumped crystal.
    SplitStep,
}

impl SimModel {
    pub fn name(&self) -> &'static str {
        match self {
            SimModel::DiagonalBogoliubov => "diagonal",
            SimModel::SplitStep => "split_step",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FieldOrdering {
    /// Wigner sampling; intensities are `|a|² − 1/2`.
    #[default]
    Symmetric,
    /// Per-beam P sampling; intensities are `|a|²` with no vacuum floor.
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimFidelity {
    pub model: SimModel,
    /// Number of propagation steps through the crystal (split-step only).
    pub n_z_steps: usize,
    /// Independent temporal modes accumulated per frame.
    pub temporal_modes_m: usize,
    pub rng_seed: u64,
    pub ordering: FieldOrdering,
    /// Relative RMS pulse-to-pulse fluctuation of pump power; zero disables it.
    pub power_jitter: f64,
}

impl Default for SimFidelity {
    fn default() -> Self {
        SimFidelity {
            model: SimModel::SplitStep,
            n_z_steps: 16,
            temporal_modes_m: 100,
            rng_seed: 1,
            ordering: FieldOrdering::Symmetric,
            power_jitter: 0.0,
        }
    }
}

impl SimFidelity {
    pub fn validate(&self) -> Result<()> {
        ensure(self.n_z_steps >= 1, "n_z_steps", || "need at least one z step".into())?;
        ensure(self.temporal_modes_m >= 1, "temporal_modes", || {
            "need at least one temporal mode".into()
        })?;
        ensure(self.power_jitter >= 0.0, "power_jitter", || {
            "power jitter must be non-negative".into()
        })
    }
}

/// Physical parameters of one simulated configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSetup {
    pub crystal: CrystalParams,
    pub pump: PumpParams,
    pub detuning: DetuningModel,
    pub grid: ModeGrid,
}

impl SimSetup {
    pub fn validate(&self) -> Result<()> {
        self.crystal.validate()?;
        self.pump.validate()?;
        self.grid.validate()
    }

    pub fn with_gain(mut self, g: f64) -> Self {
        self.crystal.chi2_gain_g = g;
        self
    }

    pub fn with_waist(mut self, waist: f64) -> Self {
        self.pump.waist_wp = waist;
        self
    }
}

/// Far-field photon-number estimates of one temporal mode, per grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldIntensity {
    pub signal: Array2<f64>,
    pub idler: Array2<f64>,
}

impl FarFieldIntensity {
    pub fn zeros(shape: (usize, usize)) -> Self {
        FarFieldIntensity {
            signal: Array2::zeros(shape),
            idler: Array2::zeros(shape),
        }
    }

    pub fn accumulate(&mut self, other: &FarFieldIntensity) {
        self.signal += &other.signal;
        self.idler += &other.idler;
    }

    pub fn mean_signal(&self) -> f64 {
        self.signal.mean().unwrap_or(0.0)
    }
}

/// Reusable simulator for one setup; holds the FFT plans.
#[derive(Debug)]
pub struct Simulator {
    setup: SimSetup,
    fidelity: SimFidelity,
    plan: Fft2,
}

const JITTER_STREAM: u64 = u64::MAX;
const DETECT_STREAM: u64 = u64::MAX - 1;

impl Simulator {
    pub fn new(setup: SimSetup, fidelity: SimFidelity) -> Result<Self> {
        setup.validate()?;
        fidelity.validate()?;
        if fidelity.model == SimModel::SplitStep {
            propagate::check_step_size(&setup, &fidelity)?;
        }
        propagate::check_light_cone(&setup)?;
        let (rows, cols) = setup.grid.shape();
        Ok(Simulator {
            setup,
            fidelity,
            plan: Fft2::new(rows, cols),
        })
    }

    pub fn setup(&self) -> &SimSetup {
        &self.setup
    }

    pub fn fidelity(&self) -> &SimFidelity {
        &self.fidelity
    }

    /// One temporal-mode realization at gain `g`.
    pub fn realization(&self, g: f64, seed: u64) -> FarFieldIntensity {
        let setup = self.setup.with_gain(g);
        propagate::realize(&setup, &self.fidelity, &self.plan, seed)
    }

    /// Peak gain of frame `index`, including pulse-to-pulse power jitter.
    pub fn frame_gain(&self, index: u64) -> f64 {
        let g = self.setup.crystal.chi2_gain_g;
        if self.fidelity.power_jitter == 0.0 {
            return g;
        }
        let mut rng = seed::rng(self.fidelity.rng_seed, &[index, JITTER_STREAM]);
        let z: f64 = StandardNormal.sample(&mut rng);
        // g scales with the square root of the pulse power
        g * (1.0 + self.fidelity.power_jitter * z).max(0.0).sqrt()
    }

    /// Sum of all temporal modes of frame `index`, before detection.
    ///
    /// Modes are generated in parallel and summed in index order, so the
    /// result does not depend on the thread count.
    pub fn accumulated(&self, index: u64) -> FarFieldIntensity {
        let g = self.frame_gain(index);
        let master = self.fidelity.rng_seed;
        let modes: Vec<FarFieldIntensity> = (0..self.fidelity.temporal_modes_m as u64)
            .into_par_iter()
            .map(|m| self.realization(g, seed::derive(master, &[index, m])))
            .collect();
        let mut total = FarFieldIntensity::zeros(self.setup.grid.shape());
        for mode in &modes {
            total.accumulate(mode);
        }
        total
    }

    pub fn frame(&self, index: u64, detector: &DetectorParams) -> Result<Frame> {
        let g = self.frame_gain(index);
        let total = self.accumulated(index);
        let meta = FrameMeta {
            g,
            waist_wp: self.setup.pump.waist_wp,
            peak_power: self.setup.pump.peak_power,
            seed: self.fidelity.rng_seed,
            frame_index: index,
            model: self.fidelity.model,
            temporal_modes: self.fidelity.temporal_modes_m,
        };
        let det_seed = seed::derive(self.fidelity.rng_seed, &[index, DETECT_STREAM]);
        detector::detect_accumulated(&total, &self.setup.grid, detector, det_seed, meta)
    }

    pub fn frames(&self, count: usize, detector: &DetectorParams) -> Result<Vec<Frame>> {
        (0..count as u64).map(|i| self.frame(i, detector)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> ModeGrid {
        ModeGrid::for_detector(8, 8, 1, 710e-9, 0.1, 20e-6).unwrap()
    }

    #[test]
    fn vacuum_is_deterministic() {
        let (s1, i1) = sample_vacuum(grid(), 42);
        let (s2, i2) = sample_vacuum(grid(), 42);
        assert_eq!(s1, s2);
        assert_eq!(i1, i2);
        let (s3, _) = sample_vacuum(grid(), 43);
        assert_ne!(s1, s3);
        assert!(s1.is_finite() && i1.is_finite());
    }

    #[test]
    fn vacuum_moments() {
        let g = grid();
        let draws = 10_000u64;
        let mut sum = Complex64::default();
        let mut power = 0.0;
        for seed in 0..draws {
            let (s, _) = sample_vacuum(g, seed);
            let v = s.values[(3, 5)];
            sum += v;
            power += v.norm_sqr();
        }
        let n = draws as f64;
        let mean = sum / n;
        // each quadrature has variance 1/4, standard error 0.5/√n
        let se = 0.5 / n.sqrt();
        assert!(mean.re.abs() < 3.0 * se && mean.im.abs() < 3.0 * se, "{mean}");
        assert!((power / n - 0.5).abs() < 0.01, "{}", power / n);
    }
}
