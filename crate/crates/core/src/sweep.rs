//! Parameter sweeps: simulate, measure and fit across pump power or waist.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    auto_correlation_with, auto_sums, cross_correlation_with, default_regions, ensemble_auto_correlation,
    find_symmetry_center, speckle_radius, ssn_sigma, CorrelationMap, CorrelationOptions, CorrelationSums, Method,
    Region,
};
use crate::config::{Detection, DiameterGain, ExperimentConfig, SweepKind};
use crate::error::{Error, Result};
use crate::fitting::{fit_power_law, fit_sinh2, CurveData, FitResult};
use crate::seed;
use crate::simulator::{Frame, Simulator};

/// Estimators evaluated on one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMetrics {
    pub frame_index: u64,
    pub mean_counts: f64,
    pub radius_px: Option<f64>,
    pub c12_peak: f64,
    pub c12_peak_dy: isize,
    pub c12_peak_dx: isize,
    pub sigma2: f64,
    pub sigma2_norm: f64,
}

/// Frame-averaged estimators with standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub frames: usize,
    pub mean_counts: f64,
    pub mean_counts_se: f64,
    /// Half-width at half-maximum of the ensemble auto-correlation.
    pub radius_px: Option<f64>,
    pub radius_px_se: Option<f64>,
    /// Twin-beam estimators; absent under ideal detection.
    pub c12_peak: Option<f64>,
    pub sigma2: Option<f64>,
    pub sigma2_norm: Option<f64>,
    pub sigma2_norm_se: Option<f64>,
    pub per_frame: Vec<FrameMetrics>,
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Signal region from the config (or the default inset) and its reflected
/// idler partner, optionally re-centered on the measured symmetry center.
pub fn regions_for(frame: &Frame, cfg_r1: Option<Region>, margin: usize, center_search: usize) -> Result<(Region, Region)> {
    let (default_r1, _) = default_regions(frame, margin)?;
    let r1 = cfg_r1.unwrap_or(default_r1);
    let mut center = frame.geometry.symmetry_center;
    if center_search > 0 {
        center = find_symmetry_center(frame, &r1, center, center_search)?;
    }
    let r2 = r1.mirrored(center)?;
    Ok((r1, r2))
}

pub fn frame_metrics(frame: &Frame, r1: &Region, r2: &Region, opts: &CorrelationOptions) -> Result<FrameMetrics> {
    let auto = auto_correlation_with(frame, r1, opts)?;
    let cross = cross_correlation_with(frame, r1, r2, opts)?;
    let ssn = ssn_sigma(frame, r1, r2)?;
    let values = frame.values();
    let mean_counts = r1.view(&values)?.mean().unwrap_or(f64::NAN);
    Ok(FrameMetrics {
        frame_index: frame.meta.frame_index,
        mean_counts,
        radius_px: speckle_radius(&auto).ok(),
        c12_peak: cross.peak_value,
        c12_peak_dy: cross.peak_location.0,
        c12_peak_dx: cross.peak_location.1,
        sigma2: ssn.sigma2,
        sigma2_norm: ssn.normalized,
    })
}

/// Evaluate all estimators over a set of frames sharing one geometry.
pub fn measure(frames: &[Frame], r1: &Region, r2: &Region, max_lag: usize) -> Result<Measurement> {
    if frames.is_empty() {
        return Err(Error::Domain("no frames to measure".into()));
    }
    let lag = max_lag.min(r1.height / 2).min(r1.width / 2);
    let opts = CorrelationOptions {
        max_lag: Some((lag, lag)),
        ..Default::default()
    };
    let per_frame = frames
        .iter()
        .map(|f| frame_metrics(f, r1, r2, &opts))
        .collect::<Result<Vec<_>>>()?;
    let col = |f: fn(&FrameMetrics) -> f64| per_frame.iter().map(f).collect::<Vec<_>>();
    let (mean_counts, mean_counts_se) = mean_se(&col(|m| m.mean_counts));
    let (c12_peak, _) = mean_se(&col(|m| m.c12_peak));
    let (sigma2, _) = mean_se(&col(|m| m.sigma2));
    let (sigma2_norm, sigma2_norm_se) = mean_se(&col(|m| m.sigma2_norm));
    let ensemble = ensemble_auto_correlation(frames, r1, &opts)?;
    let radius_px = speckle_radius(&ensemble).ok();
    let radii: Vec<f64> = per_frame.iter().filter_map(|m| m.radius_px).collect();
    let radius_px_se = (radii.len() >= 2).then(|| mean_se(&radii).1);
    Ok(Measurement {
        frames: frames.len(),
        mean_counts,
        mean_counts_se,
        radius_px,
        radius_px_se,
        c12_peak: Some(c12_peak),
        sigma2: Some(sigma2),
        sigma2_norm: Some(sigma2_norm),
        sigma2_norm_se: Some(sigma2_norm_se).filter(|v| v.is_finite()),
        per_frame,
    })
}

/// Speckle radius and mean level of the noise-free accumulated signal
/// intensity of `frames` frames, analyzed at grid resolution over the whole
/// grid. Lengths are reported in detector pixels.
pub fn measure_intensity(sim: &Simulator, frames: usize, max_lag_px: usize) -> Result<Measurement> {
    if frames == 0 {
        return Err(Error::Domain("no frames to measure".into()));
    }
    let grid = sim.setup().grid;
    let bin = grid.bin_factor()?;
    let (rows, cols) = grid.shape();
    let lag = (max_lag_px * bin).min(rows / 2).min(cols / 2);
    let opts = CorrelationOptions {
        max_lag: Some((lag, lag)),
        method: Method::Fft,
    };
    let mut total: Option<CorrelationSums> = None;
    let mut levels = Vec::with_capacity(frames);
    let mut radii = Vec::with_capacity(frames);
    let mut per_frame = Vec::with_capacity(frames);
    for index in 0..frames as u64 {
        let acc = sim.accumulated(index);
        let sums = auto_sums(acc.signal.view(), &opts)?;
        let radius = speckle_radius(&unit_peak(sums.normalize())).ok().map(|r| r / bin as f64);
        let level = acc.mean_signal() * (bin * bin) as f64;
        levels.push(level);
        radii.extend(radius);
        per_frame.push(FrameMetrics {
            frame_index: index,
            mean_counts: level,
            radius_px: radius,
            c12_peak: f64::NAN,
            c12_peak_dy: 0,
            c12_peak_dx: 0,
            sigma2: f64::NAN,
            sigma2_norm: f64::NAN,
        });
        match total.as_mut() {
            Some(t) => t.add(&sums),
            None => total = Some(sums),
        }
    }
    let (mean_counts, mean_counts_se) = mean_se(&levels);
    let ensemble = unit_peak(total.ok_or(Error::EmptyRegion)?.normalize());
    Ok(Measurement {
        frames,
        mean_counts,
        mean_counts_se,
        radius_px: speckle_radius(&ensemble).ok().map(|r| r / bin as f64),
        radius_px_se: (radii.len() >= 2).then(|| mean_se(&radii).1),
        c12_peak: None,
        sigma2: None,
        sigma2_norm: None,
        sigma2_norm_se: None,
        per_frame,
    })
}

fn unit_peak(map: CorrelationMap) -> CorrelationMap {
    let mut values = map.values;
    values[map.max_lag] = 1.0;
    CorrelationMap::new(values, map.max_lag)
}

/// Simulate `cfg.frames` frames for the configuration and measure them.
/// Under ideal detection no frames are produced.
pub fn simulate_and_measure(cfg: &ExperimentConfig) -> Result<(Vec<Frame>, Measurement)> {
    let sim = Simulator::new(cfg.setup()?, cfg.fidelity)?;
    let a = &cfg.analysis;
    if a.detection == Detection::Ideal {
        return Ok((Vec::new(), measure_intensity(&sim, cfg.frames, a.max_lag)?));
    }
    let frames = sim.frames(cfg.frames, &cfg.detector)?;
    let (r1, r2) = regions_for(&frames[0], a.r1, a.margin, a.center_search)?;
    let m = measure(&frames, &r1, &r2, a.max_lag)?;
    Ok((frames, m))
}

/// One row of a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub index: usize,
    pub x: f64,
    pub x_unit: String,
    pub g: f64,
    pub mean_counts: Option<f64>,
    pub mean_counts_se: Option<f64>,
    pub radius_px: Option<f64>,
    pub radius_px_se: Option<f64>,
    pub c12_peak: Option<f64>,
    pub sigma2: Option<f64>,
    pub sigma2_norm: Option<f64>,
    pub sigma2_norm_se: Option<f64>,
    pub frames: usize,
    pub seed: u64,
    /// `ok`, or the error category and message that stopped this point.
    pub status: String,
}

/// Fitted parameters, one row per parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub model: String,
    pub param: String,
    pub value: f64,
    pub stderr: f64,
    pub residual_rms: f64,
}

pub fn fit_records(fit: &FitResult) -> Vec<FitRecord> {
    fit.names
        .iter()
        .zip(&fit.params)
        .zip(&fit.param_errs)
        .map(|((name, &value), &stderr)| FitRecord {
            model: fit.model_id.name().to_string(),
            param: name.to_string(),
            value,
            stderr,
            residual_rms: fit.residual_rms,
        })
        .collect()
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    /// `sinh²` fit of counts against power, or power-law fit of radius
    /// against waist; `Err` if the data do not support one.
    pub fit: Result<FitResult>,
}

struct Point {
    x: f64,
    x_unit: &'static str,
    g: f64,
    waist: f64,
    power: f64,
}

fn sweep_points(cfg: &ExperimentConfig) -> Result<Vec<Point>> {
    let base = Point {
        x: 0.0,
        x_unit: "",
        g: cfg.crystal.chi2_gain_g,
        waist: cfg.pump.waist_wp,
        power: cfg.pump.peak_power,
    };
    Ok(match &cfg.sweep.kind {
        SweepKind::None => {
            return Err(Error::Config {
                line: 0,
                key: "sweep".into(),
                reason: "no sweep configured".into(),
            })
        }
        SweepKind::Power(ps) => ps
            .iter()
            .map(|&p| Point { x: p / 1e6, x_unit: "MW", g: cfg.gain_for_power(p), power: p, ..base })
            .collect(),
        SweepKind::Gain(gs) => gs
            .iter()
            .map(|&g| {
                let p = (g / cfg.sigma).powi(2) * 1e6;
                Point { x: p / 1e6, x_unit: "MW", g, power: p, ..base }
            })
            .collect(),
        SweepKind::Waist(ws) => ws
            .iter()
            .map(|&w| {
                let g = match cfg.sweep.diameter_gain {
                    DiameterGain::Fixed => base.g,
                    DiameterGain::FixedPower => base.g * cfg.sweep.wp_ref / w,
                };
                Point { x: w * 1e3, x_unit: "mm", g, waist: w, ..base }
            })
            .collect(),
    })
}

fn run_point(cfg: &ExperimentConfig, p: &Point, seed: u64) -> Result<Measurement> {
    let mut point = cfg.clone();
    point.crystal.chi2_gain_g = p.g;
    point.pump.waist_wp = p.waist;
    point.pump.peak_power = p.power;
    point.fidelity.rng_seed = seed;
    Ok(simulate_and_measure(&point)?.1)
}

/// Run the configured sweep. A failing point is recorded in its row's status
/// and does not stop the sweep.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    let points = sweep_points(cfg)?;
    let mut records = Vec::with_capacity(points.len());
    for (index, p) in points.iter().enumerate() {
        let seed = seed::derive(cfg.fidelity.rng_seed, &[index as u64]);
        let mut rec = SweepRecord {
            index,
            x: p.x,
            x_unit: p.x_unit.to_string(),
            g: p.g,
            mean_counts: None,
            mean_counts_se: None,
            radius_px: None,
            radius_px_se: None,
            c12_peak: None,
            sigma2: None,
            sigma2_norm: None,
            sigma2_norm_se: None,
            frames: 0,
            seed,
            status: "ok".into(),
        };
        match run_point(cfg, p, seed) {
            Ok(m) => {
                rec.mean_counts = Some(m.mean_counts);
                rec.mean_counts_se = Some(m.mean_counts_se).filter(|v| v.is_finite());
                rec.radius_px = m.radius_px;
                rec.radius_px_se = m.radius_px_se;
                rec.c12_peak = m.c12_peak;
                rec.sigma2 = m.sigma2;
                rec.sigma2_norm = m.sigma2_norm;
                rec.sigma2_norm_se = m.sigma2_norm_se;
                rec.frames = m.frames;
                if m.radius_px.is_none() {
                    rec.status = "ok; radius undefined".into();
                }
            }
            Err(e) => rec.status = format!("{}: {e}", e.category()),
        }
        records.push(rec);
    }
    let fit = fit_sweep(cfg, &records);
    Ok(SweepOutcome { records, fit })
}

fn fit_sweep(cfg: &ExperimentConfig, records: &[SweepRecord]) -> Result<FitResult> {
    match cfg.sweep.kind {
        SweepKind::Waist(_) => {
            let pts: Vec<(f64, f64, Option<f64>)> = records
                .iter()
                .filter_map(|r| r.radius_px.map(|y| (r.x, y, r.radius_px_se)))
                .collect();
            fit_power_law(&curve(&pts))
        }
        _ => {
            let pts: Vec<(f64, f64, Option<f64>)> = records
                .iter()
                .filter_map(|r| r.mean_counts.map(|y| (r.x, y, r.mean_counts_se)))
                .collect();
            fit_sinh2(&curve(&pts), Some((1.0, cfg.sigma)))
        }
    }
}

fn curve(pts: &[(f64, f64, Option<f64>)]) -> CurveData {
    let data = CurveData::new(pts.iter().map(|p| p.0).collect(), pts.iter().map(|p| p.1).collect());
    if pts.iter().all(|p| p.2.is_some_and(|e| e > 0.0)) {
        data.with_errors(pts.iter().map(|p| p.2.unwrap()).collect())
    } else {
        data
    }
}

/// Write `sweep.csv`, `fit.csv` (when the fit succeeded) and the resolved
/// configuration into `dir`.
pub fn write_sweep(outcome: &SweepOutcome, cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    crate::frameio::write_csv(&dir.join("sweep.csv"), &outcome.records)?;
    if let Ok(fit) = &outcome.fit {
        crate::frameio::write_csv(&dir.join("fit.csv"), &fit_records(fit))?;
    }
    std::fs::write(
        dir.join("config.resolved"),
        format!("{}config_hash = {}\n", cfg.echo_text(), cfg.hash()),
    )?;
    Ok(())
}
