use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("evanescent mode: |q| = {q:.6e} exceeds k = {k:.6e}")]
    Evanescent { q: f64, k: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("config line {line}: key `{key}`: {reason}")]
    Config {
        line: usize,
        key: String,
        reason: String,
    },

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("region is empty")]
    EmptyRegion,

    #[error("zero variance in region, correlation is undefined")]
    ZeroVariance,

    #[error("correlation profile never falls to half maximum within {max_radius:.1} px")]
    RegionTooSmall { max_radius: f64 },

    #[error("fit did not converge after {iterations} iterations (best residual rms {best_rms:.4e}, params {best_params:?})")]
    NonConvergence {
        iterations: usize,
        best_rms: f64,
        best_params: Vec<f64>,
    },

    #[error("fit is undefined: {0}")]
    FitUndefined(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("count {value} does not fit in 16 bits")]
    Scaling { value: u32 },

    #[error("integrity check failed for {path}: {reason}")]
    Integrity { path: PathBuf, reason: String },

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable category, printed by the CLI on failure.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Evanescent { .. } | Error::InvalidParameter { .. } | Error::Config { .. } => {
                "config"
            }
            Error::Geometry(_) => "geometry",
            Error::EmptyRegion
            | Error::ZeroVariance
            | Error::RegionTooSmall { .. } => "analysis",
            Error::NonConvergence { .. } | Error::FitUndefined(_) | Error::Domain(_) => "fit",
            Error::Scaling { .. } => "scaling",
            Error::Integrity { .. } => "integrity",
            Error::Format { .. } | Error::Io(_) | Error::Csv(_) => "io",
        }
    }

    /// Process exit code associated with [`Error::category`].
    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "config" => 2,
            "geometry" => 3,
            "analysis" => 4,
            "fit" => 5,
            "scaling" => 6,
            "integrity" => 7,
            _ => 10,
        }
    }
}

pub(crate) fn ensure(cond: bool, name: &'static str, reason: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: reason(),
        })
    }
}
