//! Experiment configuration files.
//!
//! The format is one `key = value` pair per line; `#` starts a comment. Units
//! are given as a key suffix (`wp_mm = 0.65`) or after the value
//! (`crystal_length = 1 cm`). Lists are comma separated, with one unit for
//! the whole list (`sweep_power = 0.2, 0.4 MW`). Unknown keys,
//! duplicate keys, unit mismatches and invalid values are rejected with the
//! offending line number.
//!
//! | key | unit kind | default |
//! |-----|-----------|---------|
//! | `crystal_length` | length | required |
//! | `wp` (pump waist radius) | length | required |
//! | `g` (peak parametric gain) | — | required |
//! | `refractive_index` | — | 1.66 |
//! | `sigma` (gain per √MW, `g = sigma·√P`) | — | 1.91 |
//! | `wavelength_p` | length | 355 nm |
//! | `peak_power` | power | 0.78 MW |
//! | `wavelength` (detected) | length | 710 nm |
//! | `focal` | length | 10 cm |
//! | `pixel_pitch` | length | 20 um |
//! | `grid_n`, `grid_nx`, `grid_ny` | count | 128 |
//! | `bin` (grid cells per pixel) | px | 4 |
//! | `detuning` | `ideal` \| `paraxial` | ideal |
//! | `theta` | angle | atan(0.05) |
//! | `dk0` | wavenumber | 0 |
//! | `model` | `diagonal` \| `split_step` | split_step |
//! | `nz_steps` | count | 16 |
//! | `temporal_modes` | count | 100 |
//! | `ordering` | `symmetric` \| `normal` | symmetric |
//! | `power_jitter` (relative RMS) | — | 0.2 |
//! | `seed` | count | 1 |
//! | `eta` | — | 0.8 |
//! | `read_noise` (electrons) | — | 5 |
//! | `integerization` | `round` \| `poisson` | round |
//! | `ccd_cols`, `ccd_rows` | px | 1340, 400 |
//! | `frames` | count | 30 |
//! | `r1` (`row,col,height,width`) | px | centered, `margin` px inset |
//! | `margin` | px | 2 |
//! | `max_lag` | px | 10 |
//! | `center_search` | px | 0 |
//! | `detection` | `ccd` \| `ideal` | ccd |
//! | `sweep` | `none` \| `power` \| `gain` \| `diameter` | none |
//! | `sweep_power` | power list | — |
//! | `sweep_g` | list | — |
//! | `sweep_wp` | length list | — |
//! | `diameter_gain` | `fixed` \| `fixed_power` | fixed |
//! | `wp_ref` | length | `wp` |
//!
//! Length units: `m`, `cm`, `mm`, `um`, `nm`. Power: `W`, `kW`, `MW`.
//! Angle: `rad`, `mrad`, `deg`. Wavenumber: `per_m`, `per_mm`. Pixels: `px`.

use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::analysis::{Region, RegionRole};
use crate::error::{Error, Result};
use crate::grid::ModeGrid;
use crate::kernel::{CrystalParams, DetuningModel, DetuningVariant, PumpParams};
use crate::simulator::{DetectorParams, FieldOrdering, Integerization, SimFidelity, SimModel, SimSetup};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dim {
    Length,
    Power,
    Angle,
    Wavenumber,
    Pixels,
    Plain,
}

impl Dim {
    fn scale(&self, unit: &str) -> Option<f64> {
        match (self, unit) {
            (Dim::Length, "m") => Some(1.0),
            (Dim::Length, "cm") => Some(1e-2),
            (Dim::Length, "mm") => Some(1e-3),
            (Dim::Length, "um") => Some(1e-6),
            (Dim::Length, "nm") => Some(1e-9),
            (Dim::Power, "W") => Some(1.0),
            (Dim::Power, "kW") => Some(1e3),
            (Dim::Power, "MW") => Some(1e6),
            (Dim::Angle, "rad") => Some(1.0),
            (Dim::Angle, "mrad") => Some(1e-3),
            (Dim::Angle, "deg") => Some(std::f64::consts::PI / 180.0),
            (Dim::Wavenumber, "per_m") => Some(1.0),
            (Dim::Wavenumber, "per_mm") => Some(1e3),
            (Dim::Pixels, "px") => Some(1.0),
            (Dim::Pixels | Dim::Plain, "") => Some(1.0),
            _ => None,
        }
    }

    fn needs_unit(&self) -> bool {
        !matches!(self, Dim::Pixels | Dim::Plain)
    }
}

const KNOWN_UNITS: &[&str] = &[
    "m", "cm", "mm", "um", "nm", "W", "kW", "MW", "rad", "mrad", "deg", "per_m", "per_mm", "px",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Number,
    List,
    Text,
}

struct KeySpec {
    name: &'static str,
    dim: Dim,
    kind: Kind,
}

const fn key(name: &'static str, dim: Dim, kind: Kind) -> KeySpec {
    KeySpec { name, dim, kind }
}

const KEYS: &[KeySpec] = &[
    key("crystal_length", Dim::Length, Kind::Number),
    key("refractive_index", Dim::Plain, Kind::Number),
    key("g", Dim::Plain, Kind::Number),
    key("sigma", Dim::Plain, Kind::Number),
    key("wp", Dim::Length, Kind::Number),
    key("wavelength_p", Dim::Length, Kind::Number),
    key("peak_power", Dim::Power, Kind::Number),
    key("wavelength", Dim::Length, Kind::Number),
    key("focal", Dim::Length, Kind::Number),
    key("pixel_pitch", Dim::Length, Kind::Number),
    key("grid_n", Dim::Plain, Kind::Number),
    key("grid_nx", Dim::Plain, Kind::Number),
    key("grid_ny", Dim::Plain, Kind::Number),
    key("bin", Dim::Pixels, Kind::Number),
    key("detuning", Dim::Plain, Kind::Text),
    key("theta", Dim::Angle, Kind::Number),
    key("dk0", Dim::Wavenumber, Kind::Number),
    key("model", Dim::Plain, Kind::Text),
    key("nz_steps", Dim::Plain, Kind::Number),
    key("temporal_modes", Dim::Plain, Kind::Number),
    key("ordering", Dim::Plain, Kind::Text),
    key("power_jitter", Dim::Plain, Kind::Number),
    key("seed", Dim::Plain, Kind::Number),
    key("eta", Dim::Plain, Kind::Number),
    key("read_noise", Dim::Plain, Kind::Number),
    key("integerization", Dim::Plain, Kind::Text),
    key("ccd_cols", Dim::Pixels, Kind::Number),
    key("ccd_rows", Dim::Pixels, Kind::Number),
    key("frames", Dim::Plain, Kind::Number),
    key("r1", Dim::Pixels, Kind::Text),
    key("margin", Dim::Pixels, Kind::Number),
    key("max_lag", Dim::Pixels, Kind::Number),
    key("center_search", Dim::Pixels, Kind::Number),
    key("detection", Dim::Plain, Kind::Text),
    key("sweep", Dim::Plain, Kind::Text),
    key("sweep_power", Dim::Power, Kind::List),
    key("sweep_g", Dim::Plain, Kind::List),
    key("sweep_wp", Dim::Length, Kind::List),
    key("diameter_gain", Dim::Plain, Kind::Text),
    key("wp_ref", Dim::Length, Kind::Number),
];

const REQUIRED: &[&str] = &["crystal_length", "wp", "g"];

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Number(f64),
    List(Vec<f64>),
    Text(String),
}

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    value: Value,
}

/// What a sweep varies.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepKind {
    None,
    /// Pump peak powers in W; the gain follows `g = sigma · √(P / 1 MW)`.
    Power(Vec<f64>),
    /// Peak gains directly.
    Gain(Vec<f64>),
    /// Pump waists in m.
    Waist(Vec<f64>),
}

/// How the peak gain follows the pump waist in a diameter sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiameterGain {
    /// Same peak gain at every waist.
    Fixed,
    /// Fixed pump power: the peak amplitude, hence `g`, scales as `wp_ref / wp`.
    FixedPower,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub diameter_gain: DiameterGain,
    pub wp_ref: f64,
}

/// What the sweep analysis looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detection {
    /// Detected integer frames: binning, efficiency, read noise.
    Ccd,
    /// Noise-free accumulated far-field photon numbers at grid resolution.
    /// Only the speckle radius and mean level are measured.
    Ideal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSpec {
    pub detection: Detection,
    pub r1: Option<Region>,
    pub margin: usize,
    pub max_lag: usize,
    pub center_search: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub crystal: CrystalParams,
    pub pump: PumpParams,
    pub detuning: DetuningModel,
    /// Gain per square root of pump power in MW.
    pub sigma: f64,
    pub grid_nx: usize,
    pub grid_ny: usize,
    pub bin: usize,
    pub focal_f: f64,
    pub wavelength: f64,
    pub fidelity: SimFidelity,
    pub detector: DetectorParams,
    pub frames: usize,
    pub analysis: AnalysisSpec,
    pub sweep: SweepSpec,
}

impl ExperimentConfig {
    pub fn grid(&self) -> Result<ModeGrid> {
        ModeGrid::for_detector(
            self.grid_nx,
            self.grid_ny,
            self.bin,
            self.wavelength,
            self.focal_f,
            self.detector.pixel_pitch,
        )
    }

    pub fn setup(&self) -> Result<SimSetup> {
        Ok(SimSetup {
            crystal: self.crystal,
            pump: self.pump,
            detuning: self.detuning,
            grid: self.grid()?,
        })
    }

    /// Peak gain for a pump power in W.
    pub fn gain_for_power(&self, power: f64) -> f64 {
        self.sigma * (power / 1e6).max(0.0).sqrt()
    }

    /// Resolved configuration, SI units, one `key=value` per entry.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| out.push((k.to_string(), v));
        put("crystal_length_m", fmt(self.crystal.length_l));
        put("refractive_index", fmt(self.crystal.refractive_index_n));
        put("g", fmt(self.crystal.chi2_gain_g));
        put("sigma", fmt(self.sigma));
        put("wp_m", fmt(self.pump.waist_wp));
        put("wavelength_p_m", fmt(self.pump.wavelength_p));
        put("peak_power_W", fmt(self.pump.peak_power));
        put("wavelength_m", fmt(self.wavelength));
        put("focal_m", fmt(self.focal_f));
        put("pixel_pitch_m", fmt(self.detector.pixel_pitch));
        put("grid_nx", self.grid_nx.to_string());
        put("grid_ny", self.grid_ny.to_string());
        put("bin_px", self.bin.to_string());
        put(
            "detuning",
            match self.detuning.variant {
                DetuningVariant::Ideal => "ideal",
                DetuningVariant::ParaxialDegenerate => "paraxial",
            }
            .into(),
        );
        put("theta_rad", fmt(self.detuning.center_angle_theta));
        put("dk0_per_m", fmt(self.detuning.collinear_offset));
        put("model", self.fidelity.model.name().into());
        put("nz_steps", self.fidelity.n_z_steps.to_string());
        put("temporal_modes", self.fidelity.temporal_modes_m.to_string());
        put(
            "ordering",
            match self.fidelity.ordering {
                FieldOrdering::Symmetric => "symmetric",
                FieldOrdering::Normal => "normal",
            }
            .into(),
        );
        put("power_jitter", fmt(self.fidelity.power_jitter));
        put("seed", self.fidelity.rng_seed.to_string());
        put("eta", fmt(self.detector.quantum_efficiency_eta));
        put("read_noise", fmt(self.detector.read_noise_electrons));
        put(
            "integerization",
            match self.detector.integerization {
                Integerization::Round => "round",
                Integerization::Poisson => "poisson",
            }
            .into(),
        );
        put("ccd_cols_px", self.detector.ccd_shape.0.to_string());
        put("ccd_rows_px", self.detector.ccd_shape.1.to_string());
        put("frames", self.frames.to_string());
        if let Some(r) = &self.analysis.r1 {
            put("r1_px", format!("{},{},{},{}", r.row, r.col, r.height, r.width));
        }
        put("margin_px", self.analysis.margin.to_string());
        put("max_lag_px", self.analysis.max_lag.to_string());
        put("center_search_px", self.analysis.center_search.to_string());
        put(
            "detection",
            match self.analysis.detection {
                Detection::Ccd => "ccd",
                Detection::Ideal => "ideal",
            }
            .into(),
        );
        let list = |v: &[f64]| v.iter().map(|x| fmt(*x)).collect::<Vec<_>>().join(",");
        match &self.sweep.kind {
            SweepKind::None => put("sweep", "none".into()),
            SweepKind::Power(p) => {
                put("sweep", "power".into());
                put("sweep_power_W", list(p));
            }
            SweepKind::Gain(g) => {
                put("sweep", "gain".into());
                put("sweep_g", list(g));
            }
            SweepKind::Waist(w) => {
                put("sweep", "diameter".into());
                put("sweep_wp_m", list(w));
            }
        }
        put(
            "diameter_gain",
            match self.sweep.diameter_gain {
                DiameterGain::Fixed => "fixed",
                DiameterGain::FixedPower => "fixed_power",
            }
            .into(),
        );
        put("wp_ref_m", fmt(self.sweep.wp_ref));
        out
    }

    pub fn echo_text(&self) -> String {
        self.echo().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// SHA-256 of the resolved configuration, hex encoded.
    pub fn hash(&self) -> String {
        hex(&Sha256::digest(self.echo_text().as_bytes()))
    }

    /// Configuration with the reference apparatus values and the given required keys.
    pub fn with_defaults(crystal_length: f64, wp: f64, g: f64) -> Result<Self> {
        parse_config(&format!("crystal_length_m = {crystal_length}\nwp_m = {wp}\ng = {g}\n"))
    }
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

/// `v · scale`, dividing by the exact reciprocal for decimal submultiples so
/// that e.g. `0.65 mm` becomes exactly `0.00065`.
fn apply_scale(v: f64, scale: f64) -> f64 {
    let inv = 1.0 / scale;
    if scale < 1.0 && (inv - inv.round()).abs() < 1e-6 {
        v / inv.round()
    } else {
        v * scale
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn read_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

fn cfg_err(line: usize, key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        line,
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn lookup(name: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|k| k.name == name)
}

/// Split `raw_key` into a known base key and an optional unit suffix.
fn resolve_key(raw_key: &str, line: usize) -> Result<(&'static KeySpec, Option<String>)> {
    if let Some(spec) = lookup(raw_key) {
        return Ok((spec, None));
    }
    for (idx, _) in raw_key.match_indices('_').collect::<Vec<_>>().into_iter().rev() {
        let (base, unit) = (&raw_key[..idx], &raw_key[idx + 1..]);
        if let Some(spec) = lookup(base) {
            if KNOWN_UNITS.contains(&unit) {
                return Ok((spec, Some(unit.to_string())));
            }
        }
    }
    Err(cfg_err(line, raw_key, "unknown key"))
}

fn split_value_unit(raw: &str) -> (&str, Option<&str>) {
    let raw = raw.trim();
    match raw.rsplit_once(char::is_whitespace) {
        Some((num, unit)) if KNOWN_UNITS.contains(&unit) => (num.trim(), Some(unit)),
        _ => (raw, None),
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut entries: BTreeMap<&'static str, Entry> = BTreeMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (raw_key, raw_value) = content
            .split_once('=')
            .ok_or_else(|| cfg_err(line, content, "expected `key = value`"))?;
        let raw_key = raw_key.trim();
        let (spec, key_unit) = resolve_key(raw_key, line)?;
        if entries.contains_key(spec.name) {
            return Err(cfg_err(line, raw_key, "duplicate key"));
        }
        let value = match spec.kind {
            Kind::Text => {
                if key_unit.as_deref().is_some_and(|u| u != "px") {
                    return Err(cfg_err(line, raw_key, "unit mismatch: key takes no unit"));
                }
                Value::Text(raw_value.trim().to_string())
            }
            Kind::Number | Kind::List => {
                // a trailing unit on a list applies to every item
                let (body, value_unit) = split_value_unit(raw_value);
                let unit = match (key_unit.as_deref(), value_unit) {
                    (Some(a), Some(b)) if a != b => {
                        return Err(cfg_err(line, raw_key, format!("unit mismatch: `{a}` vs `{b}`")))
                    }
                    (Some(a), _) => a.to_string(),
                    (None, Some(b)) => b.to_string(),
                    (None, None) => String::new(),
                };
                if unit.is_empty() && spec.dim.needs_unit() {
                    return Err(cfg_err(line, raw_key, "missing unit"));
                }
                let scale = spec.dim.scale(&unit).ok_or_else(|| {
                    cfg_err(line, raw_key, format!("unit mismatch: `{unit}` is not a valid unit here"))
                })?;
                let parse = |s: &str| -> Result<f64> {
                    let v: f64 = s
                        .trim()
                        .parse()
                        .map_err(|_| cfg_err(line, raw_key, format!("`{}` is not a number", s.trim())))?;
                    if !v.is_finite() {
                        return Err(cfg_err(line, raw_key, "value must be finite"));
                    }
                    Ok(apply_scale(v, scale))
                };
                if spec.kind == Kind::Number {
                    Value::Number(parse(body)?)
                } else {
                    let items = body
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(parse)
                        .collect::<Result<Vec<_>>>()?;
                    if items.is_empty() {
                        return Err(cfg_err(line, raw_key, "list is empty"));
                    }
                    Value::List(items)
                }
            }
        };
        entries.insert(spec.name, Entry { line, value });
    }
    Builder { entries }.build()
}

struct Builder {
    entries: BTreeMap<&'static str, Entry>,
}

#[derive(Clone, Copy)]
enum Check {
    Positive,
    NonNegative,
    AtLeastOne,
    Unit,
    Any,
}

impl Builder {
    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.line)
    }

    fn number(&self, key: &'static str, default: Option<f64>, check: Check) -> Result<f64> {
        let (v, line) = match self.entries.get(key) {
            Some(Entry { value: Value::Number(v), line }) => (*v, *line),
            Some(e) => return Err(cfg_err(e.line, key, "expected a number")),
            None => match default {
                Some(d) => (d, 0),
                None => return Err(cfg_err(0, key, "missing required key")),
            },
        };
        let ok = match check {
            Check::Positive => v > 0.0,
            Check::NonNegative => v >= 0.0,
            Check::AtLeastOne => v >= 1.0,
            Check::Unit => (0.0..=1.0).contains(&v),
            Check::Any => true,
        };
        if !ok {
            let what = match check {
                Check::Positive => "must be positive",
                Check::NonNegative => "must be non-negative",
                Check::AtLeastOne => "must be at least 1",
                Check::Unit => "must lie in [0, 1]",
                Check::Any => unreachable!(),
            };
            return Err(cfg_err(line, key, format!("{v} {what}")));
        }
        Ok(v)
    }

    fn count(&self, key: &'static str, default: usize) -> Result<usize> {
        let v = self.number(key, Some(default as f64), Check::NonNegative)?;
        if v.fract() != 0.0 {
            return Err(cfg_err(self.line(key), key, format!("{v} is not an integer")));
        }
        Ok(v as usize)
    }

    fn choice<'a>(&self, key: &'static str, options: &[&'a str], default: &'a str) -> Result<&'a str> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(Entry { value: Value::Text(t), line }) => options
                .iter()
                .find(|o| **o == t.as_str())
                .copied()
                .ok_or_else(|| cfg_err(*line, key, format!("`{t}` is not one of {options:?}"))),
            Some(e) => Err(cfg_err(e.line, key, "expected text")),
        }
    }

    fn list(&self, key: &'static str, check: Check) -> Result<Option<Vec<f64>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(Entry { value: Value::List(v), line }) => {
                let bad = v.iter().find(|x| match check {
                    Check::Positive => **x <= 0.0,
                    Check::NonNegative => **x < 0.0,
                    _ => false,
                });
                if let Some(x) = bad {
                    return Err(cfg_err(*line, key, format!("list value {x} out of range")));
                }
                Ok(Some(v.clone()))
            }
            Some(e) => Err(cfg_err(e.line, key, "expected a list")),
        }
    }

    fn build(self) -> Result<ExperimentConfig> {
        for key in REQUIRED {
            if !self.entries.contains_key(key) {
                return Err(cfg_err(0, key, "missing required key"));
            }
        }
        let crystal = CrystalParams {
            length_l: self.number("crystal_length", None, Check::Positive)?,
            refractive_index_n: self.number("refractive_index", Some(1.66), Check::AtLeastOne)?,
            chi2_gain_g: self.number("g", None, Check::NonNegative)?,
        };
        let pump = PumpParams {
            waist_wp: self.number("wp", None, Check::Positive)?,
            wavelength_p: self.number("wavelength_p", Some(355e-9), Check::Positive)?,
            peak_power: self.number("peak_power", Some(0.78e6), Check::Positive)?,
        };
        let theta = self.number("theta", Some(0.05f64.atan()), Check::Positive)?;
        if theta >= std::f64::consts::FRAC_PI_2 {
            return Err(cfg_err(self.line("theta"), "theta", "must be below π/2"));
        }
        let detuning = DetuningModel {
            variant: match self.choice("detuning", &["ideal", "paraxial"], "ideal")? {
                "ideal" => DetuningVariant::Ideal,
                _ => DetuningVariant::ParaxialDegenerate,
            },
            center_angle_theta: theta,
            collinear_offset: self.number("dk0", Some(0.0), Check::Any)?,
        };

        let grid_n = self.count("grid_n", 128)?;
        let grid_nx = self.count("grid_nx", grid_n)?;
        let grid_ny = self.count("grid_ny", grid_n)?;
        for (key, n) in [("grid_nx", grid_nx), ("grid_ny", grid_ny)] {
            if n < 2 || n % 2 != 0 {
                let k = if self.entries.contains_key(key) { key } else { "grid_n" };
                return Err(cfg_err(self.line(k), k, format!("grid size {n} must be even and >= 2")));
            }
        }
        let bin = self.count("bin", 4)?;
        if bin == 0 || grid_nx % bin != 0 || grid_ny % bin != 0 {
            return Err(cfg_err(self.line("bin"), "bin", format!("bin {bin} must divide the grid")));
        }

        let fidelity = SimFidelity {
            model: match self.choice("model", &["diagonal", "split_step"], "split_step")? {
                "diagonal" => SimModel::DiagonalBogoliubov,
                _ => SimModel::SplitStep,
            },
            n_z_steps: self.count("nz_steps", 16)?,
            temporal_modes_m: self.count("temporal_modes", 100)?,
            rng_seed: self.count("seed", 1)? as u64,
            ordering: match self.choice("ordering", &["symmetric", "normal"], "symmetric")? {
                "normal" => FieldOrdering::Normal,
                _ => FieldOrdering::Symmetric,
            },
            power_jitter: self.number("power_jitter", Some(0.2), Check::NonNegative)?,
        };
        for (key, v) in [("nz_steps", fidelity.n_z_steps), ("temporal_modes", fidelity.temporal_modes_m)] {
            if v == 0 {
                return Err(cfg_err(self.line(key), key, "must be at least 1"));
            }
        }
        if fidelity.model == SimModel::SplitStep
            && crystal.chi2_gain_g / fidelity.n_z_steps as f64 > crate::simulator::MAX_STEP_GAIN
        {
            return Err(cfg_err(
                self.line("nz_steps"),
                "nz_steps",
                format!(
                    "gain per step exceeds {}; need at least {} steps",
                    crate::simulator::MAX_STEP_GAIN,
                    (crystal.chi2_gain_g / crate::simulator::MAX_STEP_GAIN).ceil()
                ),
            ));
        }

        let detector = DetectorParams {
            quantum_efficiency_eta: self.number("eta", Some(0.8), Check::Unit)?,
            read_noise_electrons: self.number("read_noise", Some(5.0), Check::NonNegative)?,
            ccd_shape: (self.count("ccd_cols", 1340)?, self.count("ccd_rows", 400)?),
            pixel_pitch: self.number("pixel_pitch", Some(20e-6), Check::Positive)?,
            integerization: match self.choice("integerization", &["round", "poisson"], "round")? {
                "poisson" => Integerization::Poisson,
                _ => Integerization::Round,
            },
        };

        let frames = self.count("frames", 30)?;
        if frames == 0 {
            return Err(cfg_err(self.line("frames"), "frames", "must be at least 1"));
        }
        let r1 = match self.entries.get("r1") {
            Some(Entry { value: Value::Text(t), line }) => Some(
                Region::parse(t, RegionRole::Signal).map_err(|e| cfg_err(*line, "r1", e.to_string()))?,
            ),
            _ => None,
        };
        let analysis = AnalysisSpec {
            detection: match self.choice("detection", &["ccd", "ideal"], "ccd")? {
                "ideal" => Detection::Ideal,
                _ => Detection::Ccd,
            },
            r1,
            margin: self.count("margin", 2)?,
            max_lag: self.count("max_lag", 10)?,
            center_search: self.count("center_search", 0)?,
        };

        let sweep_name = self.choice("sweep", &["none", "power", "gain", "diameter"], "none")?;
        let need = |key: &'static str, check| -> Result<Vec<f64>> {
            self.list(key, check)?.ok_or_else(|| {
                cfg_err(self.line("sweep"), key, format!("required by sweep = {sweep_name}"))
            })
        };
        let kind = match sweep_name {
            "power" => SweepKind::Power(need("sweep_power", Check::Positive)?),
            "gain" => SweepKind::Gain(need("sweep_g", Check::NonNegative)?),
            "diameter" => SweepKind::Waist(need("sweep_wp", Check::Positive)?),
            _ => SweepKind::None,
        };
        let sweep = SweepSpec {
            kind,
            diameter_gain: match self.choice("diameter_gain", &["fixed", "fixed_power"], "fixed")? {
                "fixed_power" => DiameterGain::FixedPower,
                _ => DiameterGain::Fixed,
            },
            wp_ref: self.number("wp_ref", Some(pump.waist_wp), Check::Positive)?,
        };

        let cfg = ExperimentConfig {
            crystal,
            pump,
            detuning,
            sigma: self.number("sigma", Some(1.91), Check::Positive)?,
            grid_nx,
            grid_ny,
            bin,
            focal_f: self.number("focal", Some(0.1), Check::Positive)?,
            wavelength: self.number("wavelength", Some(710e-9), Check::Positive)?,
            fidelity,
            detector,
            frames,
            analysis,
            sweep,
        };
        let rows = 2 * cfg.grid_ny / cfg.bin;
        let cols = cfg.grid_nx / cfg.bin;
        if cols > cfg.detector.ccd_shape.0 || rows > cfg.detector.ccd_shape.1 {
            return Err(cfg_err(
                self.line("bin"),
                "bin",
                format!("frame {cols}x{rows} does not fit the sensor"),
            ));
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "crystal_length = 1 cm\nwp_mm = 0.65\ng = 2.0\n";

    #[test]
    fn minimal_file_uses_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert!((cfg.crystal.length_l - 0.01).abs() < 1e-15);
        assert!((cfg.pump.waist_wp - 6.5e-4).abs() < 1e-15);
        assert!((cfg.pump.wavelength_p - 355e-9).abs() < 1e-20);
        assert_eq!(cfg.detector.ccd_shape, (1340, 400));
        assert_eq!(cfg.frames, 30);
        assert!(cfg.echo_text().contains("crystal_length_m = 1e-2"));
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn units_on_key_or_value() {
        let a = parse_config("crystal_length_mm = 10\nwp = 650 um\ng = 1\npeak_power_kW = 780\n").unwrap();
        let b = parse_config(MINIMAL).unwrap();
        assert!((a.crystal.length_l - b.crystal.length_l).abs() < 1e-15);
        assert!((a.pump.waist_wp - b.pump.waist_wp).abs() < 1e-15);
        assert!((a.pump.peak_power - 0.78e6).abs() < 1e-6);
    }

    fn err_line(text: &str) -> (usize, String, String) {
        match parse_config(text) {
            Err(Error::Config { line, key, reason }) => (line, key, reason),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn rejections_carry_line_and_key() {
        let (line, key, _) = err_line("wp_mm = 0.65\ng = 1\ncrystal_length_cm = -1\n");
        assert_eq!((line, key.as_str()), (3, "crystal_length"));
        let (line, key, reason) = err_line("crystal_length = 1 cm\nwp_mm = 0.65\ng = 1\nflux = 3\n");
        assert_eq!((line, key.as_str()), (4, "flux"));
        assert!(reason.contains("unknown"));
        let (line, _, reason) = err_line("crystal_length_MW = 1\nwp_mm = 0.65\ng = 1\n");
        assert_eq!(line, 1);
        assert!(reason.contains("unit mismatch"), "{reason}");
        let (_, key, reason) = err_line("crystal_length = 1 cm\ng = 1\n");
        assert_eq!(key, "wp");
        assert!(reason.contains("missing"));
        let (line, _, reason) = err_line("crystal_length = 1\nwp_mm = 0.65\ng = 1\n");
        assert_eq!(line, 1);
        assert!(reason.contains("missing unit"));
        let (line, _, _) = err_line(&format!("{MINIMAL}g = 3\n"));
        assert_eq!(line, 4);
        let (line, key, _) = err_line(&format!("{MINIMAL}model = fock\n"));
        assert_eq!((line, key.as_str()), (4, "model"));
        let (_, key, _) = err_line(&format!("{MINIMAL}eta = 1.5\n"));
        assert_eq!(key, "eta");
        let (_, key, _) = err_line(&format!("{MINIMAL}sweep = power\n"));
        assert_eq!(key, "sweep_power");
    }

    #[test]
    fn step_size_is_checked() {
        let text = "crystal_length = 1 cm\nwp_mm = 0.65\ng = 3\nnz_steps = 10\n";
        let (line, key, _) = err_line(text);
        assert_eq!((line, key.as_str()), (4, "nz_steps"));
    }

    #[test]
    fn sweep_lists() {
        let cfg = parse_config(&format!(
            "{MINIMAL}sweep = diameter\nsweep_wp_mm = 0.4, 0.7,1.3\ndiameter_gain = fixed_power\n"
        ))
        .unwrap();
        match &cfg.sweep.kind {
            SweepKind::Waist(w) => assert_eq!(w.len(), 3),
            other => panic!("{other:?}"),
        }
        assert_eq!(cfg.sweep.diameter_gain, DiameterGain::FixedPower);
        assert!((cfg.sweep.wp_ref - 6.5e-4).abs() < 1e-15);
        assert!((cfg.gain_for_power(1e6) - 1.91).abs() < 1e-12);
    }

    #[test]
    fn hash_tracks_content() {
        let a = parse_config(MINIMAL).unwrap();
        let b = parse_config(&format!("{MINIMAL}seed = 2\n")).unwrap();
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), parse_config(MINIMAL).unwrap().hash());
    }
}
