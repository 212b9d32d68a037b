use super::CorrelationMap;
use crate::error::{Error, Result};

/// Width of the radial averaging bins, pixels.
pub const RADIAL_BIN: f64 = 0.5;

/// Minimum peak height for which a half-maximum radius is meaningful.
pub const MIN_PEAK: f64 = 0.2;

/// Radially averaged correlation profile about the map peak.
///
/// Returns `(mean radius, mean value)` per non-empty bin, restricted to radii
/// whose rings lie completely inside the map.
pub fn radial_profile(map: &CorrelationMap) -> Vec<(f64, f64)> {
    let (py, px) = map.peak_location;
    let (ly, lx) = (map.max_lag.0 as isize, map.max_lag.1 as isize);
    let reach = [ly - py, ly + py, lx - px, lx + px]
        .into_iter()
        .min()
        .unwrap_or(0)
        .max(0) as f64;
    let n_bins = (reach / RADIAL_BIN).floor() as usize + 1;
    let mut acc = vec![(0.0, 0.0, 0usize); n_bins];
    for ((r, c), &v) in map.values.indexed_iter() {
        let dy = (r as isize - ly - py) as f64;
        let dx = (c as isize - lx - px) as f64;
        let rho = dy.hypot(dx);
        if rho > reach {
            continue;
        }
        let bin = (rho / RADIAL_BIN).round() as usize;
        if let Some(slot) = acc.get_mut(bin) {
            slot.0 += rho;
            slot.1 += v;
            slot.2 += 1;
        }
    }
    acc.into_iter()
        .filter(|s| s.2 > 0)
        .map(|(r, v, n)| (r / n as f64, v / n as f64))
        .collect()
}

/// Radius at which the radially averaged correlation first drops to half of
/// its peak, linearly interpolated between the straddling radii.
pub fn speckle_radius(map: &CorrelationMap) -> Result<f64> {
    if !(map.peak_value > MIN_PEAK) {
        return Err(Error::Domain(format!(
            "correlation peak {:.3} is below {MIN_PEAK}",
            map.peak_value
        )));
    }
    let profile = radial_profile(map);
    let half = map.peak_value / 2.0;
    for pair in profile.windows(2) {
        let ((r0, v0), (r1, v1)) = (pair[0], pair[1]);
        if v1 <= half {
            return Ok(r0 + (v0 - half) / (v0 - v1) * (r1 - r0));
        }
    }
    Err(Error::RegionTooSmall {
        max_radius: profile.last().map_or(0.0, |p| p.0),
    })
}
