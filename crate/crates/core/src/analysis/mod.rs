//! Intensity-fluctuation estimators on detected frames.
//!
//! A [`Region`] selects a rectangle of pixels. Fluctuations are taken about
//! the region's own spatial mean. The idler region paired with a signal region
//! is its point reflection through the frame's symmetry center, and the
//! cross-correlation compares each signal pixel with its reflected partner.

mod correlation;
mod radius;

use ndarray::{s, Array2, ArrayView2};

pub use correlation::{correlation_sums, sums_direct, sums_fft, CorrelationMap, CorrelationSums, Method};
pub use radius::{radial_profile, speckle_radius, MIN_PEAK, RADIAL_BIN};

use crate::error::{Error, Result};
use crate::simulator::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionRole {
    Signal,
    Idler,
}

/// Rectangle of pixels `[row, row + height) × [col, col + width)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
    pub role: RegionRole,
    /// Reflection center `(row, col)` relating this region to its partner.
    pub symmetry_center: Option<(f64, f64)>,
}

impl Region {
    pub fn new(row: usize, col: usize, height: usize, width: usize, role: RegionRole) -> Self {
        Region {
            row,
            col,
            height,
            width,
            role,
            symmetry_center: None,
        }
    }

    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Point reflection of this region through `center`.
    ///
    /// `center` must lie on the integer or half-integer lattice so the image
    /// is pixel-aligned.
    pub fn mirrored(&self, center: (f64, f64)) -> Result<Region> {
        let reflect = |origin: usize, extent: usize, c: f64| -> Result<usize> {
            let v = 2.0 * c - origin as f64 - (extent as f64 - 1.0);
            if (v - v.round()).abs() > 1e-9 {
                return Err(Error::Geometry(format!(
                    "symmetry center {c} is not on the half-pixel lattice"
                )));
            }
            if v < 0.0 {
                return Err(Error::Geometry("mirrored region leaves the frame".into()));
            }
            Ok(v.round() as usize)
        };
        Ok(Region {
            row: reflect(self.row, self.height, center.0)?,
            col: reflect(self.col, self.width, center.1)?,
            height: self.height,
            width: self.width,
            role: match self.role {
                RegionRole::Signal => RegionRole::Idler,
                RegionRole::Idler => RegionRole::Signal,
            },
            symmetry_center: Some(center),
        })
    }

    pub fn shifted(&self, dy: isize, dx: isize) -> Result<Region> {
        let row = self.row as isize + dy;
        let col = self.col as isize + dx;
        if row < 0 || col < 0 {
            return Err(Error::Geometry("shifted region leaves the frame".into()));
        }
        Ok(Region {
            row: row as usize,
            col: col as usize,
            ..*self
        })
    }

    pub fn view<'a>(&self, data: &'a Array2<f64>) -> Result<ArrayView2<'a, f64>> {
        if self.is_empty() {
            return Err(Error::EmptyRegion);
        }
        let (rows, cols) = data.dim();
        if self.row + self.height > rows || self.col + self.width > cols {
            return Err(Error::Geometry(format!(
                "region {}x{} at ({}, {}) exceeds frame {rows}x{cols}",
                self.height, self.width, self.row, self.col
            )));
        }
        Ok(data.slice(s![self.row..self.row + self.height, self.col..self.col + self.width]))
    }

    /// Parse `row,col,height,width`.
    pub fn parse(spec: &str, role: RegionRole) -> Result<Region> {
        let parts: Vec<usize> = spec
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Domain(format!("region `{spec}`: {e}")))?;
        match parts[..] {
            [row, col, height, width] => Ok(Region::new(row, col, height, width, role)),
            _ => Err(Error::Domain(format!(
                "region `{spec}` must be row,col,height,width"
            ))),
        }
    }
}

/// Largest centered signal region of a frame, and its mirrored idler partner.
pub fn default_regions(frame: &Frame, margin: usize) -> Result<(Region, Region)> {
    let geo = &frame.geometry;
    let height = geo.block_rows.saturating_sub(2 * margin);
    let width = geo.cols.saturating_sub(2 * margin);
    let mut r1 = Region::new(margin, margin, height, width, RegionRole::Signal);
    r1.symmetry_center = Some(geo.symmetry_center);
    let r2 = r1.mirrored(geo.symmetry_center)?;
    Ok((r1, r2))
}

/// `δN(x) = N(x) − ⟨N⟩` over the region.
pub fn fluctuations(frame: &Frame, region: &Region) -> Result<Array2<f64>> {
    fluctuations_of(region.view(&frame.values())?)
}

pub fn fluctuations_of(data: ArrayView2<f64>) -> Result<Array2<f64>> {
    if data.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let mean = data.sum() / data.len() as f64;
    Ok(data.mapv(|v| v - mean))
}

fn require_variance(d: &Array2<f64>) -> Result<()> {
    if d.iter().all(|&v| v == 0.0) {
        Err(Error::ZeroVariance)
    } else {
        Ok(())
    }
}

/// Options shared by the correlation estimators.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CorrelationOptions {
    /// Largest `(|dy|, |dx|)`; defaults to half the region size.
    pub max_lag: Option<(usize, usize)>,
    pub method: Method,
}

impl CorrelationOptions {
    fn lag_for(&self, shape: (usize, usize)) -> (usize, usize) {
        self.max_lag.unwrap_or((shape.0 / 2, shape.1 / 2))
    }
}

/// Un-normalized auto-correlation sums of one array.
pub fn auto_sums(data: ArrayView2<f64>, opts: &CorrelationOptions) -> Result<CorrelationSums> {
    let d = fluctuations_of(data)?;
    require_variance(&d)?;
    correlation_sums(d.view(), d.view(), opts.lag_for(d.dim()), opts.method)
}

/// Un-normalized cross-correlation sums: `a(x)` against `b` read in
/// point-reflected order, indexed so that the twin alignment is `ξ = 0`.
pub fn cross_sums(a: ArrayView2<f64>, b: ArrayView2<f64>, opts: &CorrelationOptions) -> Result<CorrelationSums> {
    let da = fluctuations_of(a)?;
    let mut db = fluctuations_of(b)?;
    require_variance(&da)?;
    require_variance(&db)?;
    db.invert_axis(ndarray::Axis(0));
    db.invert_axis(ndarray::Axis(1));
    // C12(ξ) = Σ a(p) F(p − ξ), i.e. the plain correlation at −ξ
    Ok(correlation_sums(da.view(), db.view(), opts.lag_for(da.dim()), opts.method)?.reversed())
}

pub fn auto_correlation_of(data: ArrayView2<f64>, opts: &CorrelationOptions) -> Result<CorrelationMap> {
    let mut map = auto_sums(data, opts)?.normalize();
    let (ly, lx) = map.max_lag;
    map.values[(ly, lx)] = 1.0;
    Ok(CorrelationMap::new(map.values, map.max_lag))
}

pub fn cross_correlation_of(a: ArrayView2<f64>, b: ArrayView2<f64>, opts: &CorrelationOptions) -> Result<CorrelationMap> {
    Ok(cross_sums(a, b, opts)?.normalize())
}

/// Normalized spatial auto-correlation `C(ξ)` of one region.
pub fn auto_correlation(frame: &Frame, region: &Region) -> Result<CorrelationMap> {
    auto_correlation_with(frame, region, &CorrelationOptions::default())
}

pub fn auto_correlation_with(frame: &Frame, region: &Region, opts: &CorrelationOptions) -> Result<CorrelationMap> {
    let values = frame.values();
    auto_correlation_of(region.view(&values)?, opts)
}

/// Normalized signal-idler cross-correlation `C12(ξ)` between a region and its
/// point-reflected partner.
pub fn cross_correlation(frame: &Frame, r1: &Region, r2: &Region) -> Result<CorrelationMap> {
    cross_correlation_with(frame, r1, r2, &CorrelationOptions::default())
}

pub fn cross_correlation_with(
    frame: &Frame,
    r1: &Region,
    r2: &Region,
    opts: &CorrelationOptions,
) -> Result<CorrelationMap> {
    check_congruent(r1, r2)?;
    let values = frame.values();
    cross_correlation_of(r1.view(&values)?, r2.view(&values)?, opts)
}

/// Ensemble estimator: correlation sums accumulated over frames, normalized once.
pub fn ensemble_auto_correlation(frames: &[Frame], region: &Region, opts: &CorrelationOptions) -> Result<CorrelationMap> {
    let mut total: Option<CorrelationSums> = None;
    for frame in frames {
        let values = frame.values();
        let sums = auto_sums(region.view(&values)?, opts)?;
        match total.as_mut() {
            Some(t) => t.add(&sums),
            None => total = Some(sums),
        }
    }
    let mut map = total.ok_or(Error::EmptyRegion)?.normalize();
    let (ly, lx) = map.max_lag;
    map.values[(ly, lx)] = 1.0;
    Ok(CorrelationMap::new(map.values, map.max_lag))
}

pub fn ensemble_cross_correlation(
    frames: &[Frame],
    r1: &Region,
    r2: &Region,
    opts: &CorrelationOptions,
) -> Result<CorrelationMap> {
    check_congruent(r1, r2)?;
    let mut total: Option<CorrelationSums> = None;
    for frame in frames {
        let values = frame.values();
        let sums = cross_sums(r1.view(&values)?, r2.view(&values)?, opts)?;
        match total.as_mut() {
            Some(t) => t.add(&sums),
            None => total = Some(sums),
        }
    }
    Ok(total.ok_or(Error::EmptyRegion)?.normalize())
}

fn check_congruent(r1: &Region, r2: &Region) -> Result<()> {
    if (r1.height, r1.width) != (r2.height, r2.width) {
        return Err(Error::Geometry(format!(
            "regions are not congruent: {}x{} vs {}x{}",
            r1.height, r1.width, r2.height, r2.width
        )));
    }
    Ok(())
}

/// Twin-beam difference variance over reflected pixel pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsnResult {
    /// `⟨(N1 − N2)²⟩ − ⟨N1 − N2⟩²`, counts².
    pub sigma2: f64,
    /// `sigma2 / ⟨N1 + N2⟩`; below one indicates sub-shot-noise correlation.
    pub normalized: f64,
    pub mean_sum: f64,
    pub pairs: usize,
}

pub fn ssn_sigma(frame: &Frame, r1: &Region, r2: &Region) -> Result<SsnResult> {
    check_congruent(r1, r2)?;
    let values = frame.values();
    ssn_sigma_of(r1.view(&values)?, r2.view(&values)?)
}

pub fn ssn_sigma_of(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<SsnResult> {
    if a.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let (h, w) = a.dim();
    let n = (h * w) as f64;
    let (mut sum_d, mut sum_d2, mut sum_s) = (0.0, 0.0, 0.0);
    for ((r, c), &va) in a.indexed_iter() {
        let vb = b[(h - 1 - r, w - 1 - c)];
        let d = va - vb;
        sum_d += d;
        sum_d2 += d * d;
        sum_s += va + vb;
    }
    let mean_d = sum_d / n;
    let sigma2 = (sum_d2 / n - mean_d * mean_d).max(0.0);
    let mean_sum = sum_s / n;
    if mean_sum <= 0.0 {
        return Err(Error::Domain("regions hold no counts; shot-noise level undefined".into()));
    }
    Ok(SsnResult {
        sigma2,
        normalized: sigma2 / mean_sum,
        mean_sum,
        pairs: h * w,
    })
}

/// Grid search for the reflection center maximizing `C12(0)`.
///
/// Candidates step by half a pixel within `±search` pixels of `guess`.
pub fn find_symmetry_center(frame: &Frame, r1: &Region, guess: (f64, f64), search: usize) -> Result<(f64, f64)> {
    let values = frame.values();
    let a = fluctuations_of(r1.view(&values)?)?;
    require_variance(&a)?;
    let steps = 2 * search as isize;
    let mut best: Option<(f64, (f64, f64))> = None;
    for sy in -steps..=steps {
        for sx in -steps..=steps {
            let center = (guess.0 + sy as f64 / 2.0, guess.1 + sx as f64 / 2.0);
            let Ok(r2) = r1.mirrored(center) else { continue };
            let Ok(view) = r2.view(&values) else { continue };
            let b = fluctuations_of(view)?;
            let (h, w) = a.dim();
            let (mut s, mut ea, mut eb) = (0.0, 0.0, 0.0);
            for ((r, c), &va) in a.indexed_iter() {
                let vb = b[(h - 1 - r, w - 1 - c)];
                s += va * vb;
                ea += va * va;
                eb += vb * vb;
            }
            if eb == 0.0 {
                continue;
            }
            let value = s / (ea * eb).sqrt();
            if best.is_none_or(|(v, _)| value > v) {
                best = Some((value, center));
            }
        }
    }
    best.map(|(_, c)| c)
        .ok_or_else(|| Error::Geometry("no candidate center keeps the mirrored region in frame".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fluctuation_examples() {
        let flat = Array2::from_elem((3, 3), 7.0);
        assert!(fluctuations_of(flat.view()).unwrap().iter().all(|&v| v == 0.0));
        let row = Array2::from_shape_vec((1, 4), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let d = fluctuations_of(row.view()).unwrap();
        assert_eq!(d.as_slice().unwrap(), &[-1.5, -0.5, 0.5, 1.5]);
        assert_eq!(d.sum(), 0.0);
        let empty = Array2::<f64>::zeros((0, 3));
        assert!(matches!(fluctuations_of(empty.view()), Err(Error::EmptyRegion)));
    }

    #[test]
    fn region_mirror_round_trip() {
        let r = Region::new(3, 5, 4, 6, RegionRole::Signal);
        let m = r.mirrored((10.5, 12.0)).unwrap();
        assert_eq!((m.row, m.col), (21 - 3 - 3, 24 - 5 - 5));
        let back = m.mirrored((10.5, 12.0)).unwrap();
        assert_eq!((back.row, back.col), (r.row, r.col));
        assert!(r.mirrored((10.25, 12.0)).is_err());
    }

    #[test]
    fn parse_region() {
        let r = Region::parse("1, 2,3,4", RegionRole::Idler).unwrap();
        assert_eq!((r.row, r.col, r.height, r.width), (1, 2, 3, 4));
        assert!(Region::parse("1,2,3", RegionRole::Signal).is_err());
        assert!(Region::parse("a,2,3,4", RegionRole::Signal).is_err());
    }

    #[test]
    fn zero_variance_is_an_error() {
        let flat = Array2::from_elem((4, 4), 2.0);
        let opts = CorrelationOptions::default();
        assert!(matches!(auto_correlation_of(flat.view(), &opts), Err(Error::ZeroVariance)));
        let other = Array2::from_shape_fn((4, 4), |(r, c)| (r * c) as f64);
        assert!(matches!(
            cross_correlation_of(other.view(), flat.view(), &opts),
            Err(Error::ZeroVariance)
        ));
    }

    #[test]
    fn ssn_examples() {
        let a = Array2::from_shape_fn((4, 5), |(r, c)| (r * 5 + c) as f64 + 1.0);
        let mut b = a.clone();
        b.invert_axis(ndarray::Axis(0));
        b.invert_axis(ndarray::Axis(1));
        let res = ssn_sigma_of(a.view(), b.view()).unwrap();
        assert_eq!(res.sigma2, 0.0);
        let zeros = Array2::<f64>::zeros((2, 2));
        assert!(ssn_sigma_of(zeros.view(), zeros.view()).is_err());
    }
}
