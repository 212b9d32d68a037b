//! Closed-form two-photon physics: longitudinal wave numbers, phase-matching
//! detuning, the biphoton amplitude and the analytic coherence-area widths.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;

use crate::error::{ensure, Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Half-maximum constant of the phase-matching sinc envelope.
pub const SINC_HWHM_CONSTANT: f64 = 2.78;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrystalParams {
    /// Crystal length, m.
    pub length_l: f64,
    pub refractive_index_n: f64,
    /// Parametric gain at the pump peak.
    pub chi2_gain_g: f64,
}

impl CrystalParams {
    pub fn validate(&self) -> Result<()> {
        ensure(self.length_l > 0.0, "length_l", || {
            format!("crystal length must be positive, got {}", self.length_l)
        })?;
        ensure(self.refractive_index_n >= 1.0, "refractive_index_n", || {
            format!("refractive index must be >= 1, got {}", self.refractive_index_n)
        })?;
        ensure(self.chi2_gain_g >= 0.0, "chi2_gain_g", || {
            format!("gain must be non-negative, got {}", self.chi2_gain_g)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpParams {
    /// Gaussian amplitude radius `w_p` of `exp(-ρ²/w_p²)`, m.
    pub waist_wp: f64,
    pub wavelength_p: f64,
    /// Peak pulse power, W.
    pub peak_power: f64,
}

impl PumpParams {
    pub fn validate(&self) -> Result<()> {
        ensure(self.waist_wp > 0.0, "waist_wp", || "pump waist must be positive".into())?;
        ensure(self.wavelength_p > 0.0, "wavelength_p", || {
            "pump wavelength must be positive".into()
        })?;
        ensure(self.peak_power > 0.0, "peak_power", || "pump power must be positive".into())
    }

    pub fn omega_p(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.wavelength_p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetuningVariant {
    /// Perfect phase matching, `Δk ≡ 0`.
    Ideal,
    /// Degenerate paraxial expansion around collinear matching.
    ParaxialDegenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetuningModel {
    pub variant: DetuningVariant,
    /// Emission angle used by the sinc-width predictor, rad.
    pub center_angle_theta: f64,
    /// Collinear mismatch `Δk₀`, rad/m.
    pub collinear_offset: f64,
}

impl Default for DetuningModel {
    fn default() -> Self {
        DetuningModel {
            variant: DetuningVariant::Ideal,
            center_angle_theta: 0.05f64.atan(),
            collinear_offset: 0.0,
        }
    }
}

/// `sin(u)/u` with `sinc(0) = 1`.
pub fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-8 {
        1.0 - u * u / 6.0
    } else {
        u.sin() / u
    }
}

/// Vacuum wave number of a field of angular frequency `omega` in a medium of index `n`.
pub fn wave_number(omega: f64, n: f64) -> f64 {
    omega * n / SPEED_OF_LIGHT
}

/// Longitudinal wave-vector component `√(k² − q²)`.
pub fn k_longitudinal(q: f64, omega: f64, n: f64) -> Result<f64> {
    longitudinal_from_k(q, wave_number(omega, n))
}

pub(crate) fn longitudinal_from_k(q: f64, k: f64) -> Result<f64> {
    if q.abs() > k {
        return Err(Error::Evanescent { q: q.abs(), k });
    }
    Ok(((k - q) * (k + q)).sqrt())
}

/// Wave number of the degenerate down-converted field (`ω = ω_p / 2`).
pub fn degenerate_k(crystal: &CrystalParams, pump: &PumpParams) -> f64 {
    wave_number(pump.omega_p() / 2.0, crystal.refractive_index_n)
}

/// Paraxial degenerate detuning for squared transverse momenta.
pub fn paraxial_detuning(q1_sq: f64, q2_sq: f64, k_deg: f64, collinear_offset: f64) -> f64 {
    (q1_sq + q2_sq) / (2.0 * k_deg) - collinear_offset
}

/// Longitudinal phase mismatch `Δk` of the pair `(q1, q2)` at degeneracy.
pub fn delta_k(
    q1: [f64; 2],
    q2: [f64; 2],
    model: &DetuningModel,
    crystal: &CrystalParams,
    pump: &PumpParams,
) -> Result<f64> {
    let k_deg = degenerate_k(crystal, pump);
    let q1_sq = q1[0] * q1[0] + q1[1] * q1[1];
    let q2_sq = q2[0] * q2[0] + q2[1] * q2[1];
    for q_sq in [q1_sq, q2_sq] {
        longitudinal_from_k(q_sq.sqrt(), k_deg)?;
    }
    Ok(match model.variant {
        DetuningVariant::Ideal => 0.0,
        DetuningVariant::ParaxialDegenerate => {
            paraxial_detuning(q1_sq, q2_sq, k_deg, model.collinear_offset)
        }
    })
}

/// Biphoton amplitude `g · sinc(Δk l / 2) · exp(−|q1 + q2|² w_p² / 4)`.
pub fn two_photon_amplitude(
    q1: [f64; 2],
    q2: [f64; 2],
    model: &DetuningModel,
    crystal: &CrystalParams,
    pump: &PumpParams,
) -> Result<Complex64> {
    let dk = delta_k(q1, q2, model, crystal, pump)?;
    let sx = q1[0] + q2[0];
    let sy = q1[1] + q2[1];
    let envelope = (-(sx * sx + sy * sy) * pump.waist_wp * pump.waist_wp / 4.0).exp();
    Ok(Complex64::new(
        crystal.chi2_gain_g * sinc(dk * crystal.length_l / 2.0) * envelope,
        0.0,
    ))
}

/// Phase-matching limited coherence width `2.78 / (l tan θ)`, rad/m.
pub fn predicted_hwhm_sinc(crystal: &CrystalParams, theta: f64) -> Result<f64> {
    ensure(theta > 0.0 && theta < PI / 2.0, "theta", || {
        format!("emission angle must lie in (0, π/2), got {theta}")
    })?;
    Ok(SINC_HWHM_CONSTANT / (crystal.length_l * theta.tan()))
}

/// Pump-limited coherence width `√(2 ln 2) / w_p`, rad/m.
pub fn predicted_hwhm_pump(pump: &PumpParams) -> Result<f64> {
    ensure(pump.waist_wp > 0.0, "waist_wp", || "pump waist must be positive".into())?;
    Ok((2.0 * LN_2).sqrt() / pump.waist_wp)
}

/// Ratio `δq / Δq` of pump-limited to phase-matching-limited widths.
///
/// Below one, the pump waist sets the coherence area.
pub fn regime_ratio(crystal: &CrystalParams, pump: &PumpParams, theta: f64) -> Result<f64> {
    Ok(predicted_hwhm_pump(pump)? / predicted_hwhm_sinc(crystal, theta)?)
}

/// Low-gain coherence width: the narrower of the two envelopes wins.
pub fn predicted_hwhm(crystal: &CrystalParams, pump: &PumpParams, theta: f64) -> Result<f64> {
    Ok(predicted_hwhm_pump(pump)?.min(predicted_hwhm_sinc(crystal, theta)?))
}

/// Mean photon number per mode pair, `sinh²(g)`.
pub fn mean_photons_per_mode(g: f64) -> Result<f64> {
    ensure(g >= 0.0, "g", || format!("gain must be non-negative, got {g}"))?;
    Ok(g.sinh().powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn crystal(l: f64, g: f64) -> CrystalParams {
        CrystalParams {
            length_l: l,
            refractive_index_n: 1.66,
            chi2_gain_g: g,
        }
    }

    fn pump(wp: f64) -> PumpParams {
        PumpParams {
            waist_wp: wp,
            wavelength_p: 355e-9,
            peak_power: 0.78e6,
        }
    }

    #[test]
    fn longitudinal_examples() {
        let k = 1e7;
        let omega = k * SPEED_OF_LIGHT;
        assert!((k_longitudinal(0.0, omega, 1.0).unwrap() - k).abs() < 1e-6);
        assert_eq!(k_longitudinal(k, omega, 1.0).unwrap(), 0.0);
        assert!((k_longitudinal(0.6 * k, omega, 1.0).unwrap() - 8.0e6).abs() < 1e-6);
        assert!(matches!(
            k_longitudinal(1.01 * k, omega, 1.0),
            Err(Error::Evanescent { .. })
        ));
    }

    #[test]
    fn longitudinal_is_decreasing() {
        let omega = 1e7 * SPEED_OF_LIGHT;
        let mut prev = f64::INFINITY;
        for i in 0..=100 {
            let kz = k_longitudinal(i as f64 * 1e5, omega, 1.0).unwrap();
            assert!(kz < prev);
            prev = kz;
        }
    }

    #[test]
    fn detuning_examples() {
        let c = crystal(0.01, 1.0);
        let p = pump(1e-3);
        let ideal = DetuningModel::default();
        assert_eq!(delta_k([3e4, 1e4], [-2e5, 7e3], &ideal, &c, &p).unwrap(), 0.0);
        let paraxial = DetuningModel {
            variant: DetuningVariant::ParaxialDegenerate,
            ..ideal
        };
        assert_eq!(delta_k([0.0; 2], [0.0; 2], &paraxial, &c, &p).unwrap(), 0.0);
        // 2·1e10 / (2·1.25e7)
        assert!((paraxial_detuning(1e10, 1e10, 1.25e7, 0.0) - 800.0).abs() < 1e-9);
        // pick index and wavelength so that k_deg = 1.25e7
        let p2 = PumpParams {
            wavelength_p: PI * 1.66 / 1.25e7,
            ..p
        };
        assert!((degenerate_k(&c, &p2) - 1.25e7).abs() < 1e-3);
        let dk = delta_k([1e5, 0.0], [0.0, -1e5], &paraxial, &c, &p2).unwrap();
        assert!((dk - 800.0).abs() < 1e-6, "{dk}");
    }

    #[test]
    fn amplitude_examples() {
        let c = crystal(0.01, 1.7);
        let wp = 1e-3;
        let p = pump(wp);
        let m = DetuningModel::default();
        let f = two_photon_amplitude([2e4, -3e3], [-2e4, 3e3], &m, &c, &p).unwrap();
        assert_eq!(f.re, 1.7);
        // Gaussian factor of F is 1/2 at |q1 + q2| = 2√(ln 2)/w_p ...
        let u = 2.0 * LN_2.sqrt() / wp;
        let f = two_photon_amplitude([u, 0.0], [0.0, 0.0], &m, &c, &p).unwrap();
        assert!((f.re / 1.7 - 0.5).abs() < 1e-12);
        // ... and 1/4 at 2√(2 ln 2)/w_p.
        let u = 2.0 * (2.0 * LN_2).sqrt() / wp;
        let f = two_photon_amplitude([0.0, u], [0.0, 0.0], &m, &c, &p).unwrap();
        assert!((f.re / 1.7 - 0.25).abs() < 1e-12);
        assert!(sinc(PI).abs() < 1e-15);
    }

    #[test]
    fn hwhm_predictors() {
        let c = crystal(0.01, 1.0);
        let theta = 0.05f64.atan();
        assert!((predicted_hwhm_sinc(&c, theta).unwrap() - 5560.0).abs() < 1e-9);
        let c2 = crystal(0.02, 1.0);
        assert!((predicted_hwhm_sinc(&c2, theta).unwrap() - 2780.0).abs() < 1e-9);
        assert!(predicted_hwhm_sinc(&c, 0.1).unwrap() < predicted_hwhm_sinc(&c, 0.05).unwrap());
        assert!(predicted_hwhm_sinc(&c, 0.0).is_err());

        assert!((predicted_hwhm_pump(&pump(1e-3)).unwrap() - 1177.41).abs() < 0.01);
        let r = regime_ratio(&c, &pump(0.65e-3), theta).unwrap();
        assert!((r - 1811.4 / 5560.0).abs() < 1e-4, "{r}");
        assert!(r < 1.0);
        assert_eq!(
            predicted_hwhm(&c, &pump(0.65e-3), theta).unwrap(),
            predicted_hwhm_pump(&pump(0.65e-3)).unwrap()
        );
    }

    #[test]
    fn photons_per_mode() {
        assert_eq!(mean_photons_per_mode(0.0).unwrap(), 0.0);
        assert!((mean_photons_per_mode(1.0).unwrap() - 1.3811).abs() < 1e-4);
        let ratio = mean_photons_per_mode(3.5).unwrap() / mean_photons_per_mode(1.5).unwrap();
        // 16.5426² / 2.12928²
        assert!((ratio - 60.359).abs() < 1e-3, "{ratio}");
        assert!(mean_photons_per_mode(-0.1).is_err());
    }

    /// Half-maximum of |F(q, -q + u)|² along u, by bisection on the sampled amplitude.
    fn measured_hwhm(m: &DetuningModel, c: &CrystalParams, p: &PumpParams) -> f64 {
        let q = [3e3, -1e3];
        let f0 = two_photon_amplitude(q, [-q[0], -q[1]], m, c, p).unwrap().norm_sqr();
        let at = |u: f64| {
            two_photon_amplitude(q, [-q[0] + u, -q[1]], m, c, p)
                .unwrap()
                .norm_sqr()
        };
        let step = 10.0;
        let mut u = 0.0;
        while at(u + step) > f0 / 2.0 {
            u += step;
        }
        let (mut lo, mut hi) = (u, u + step);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if at(mid) > f0 / 2.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn sampled_hwhm_matches_pump_prediction() {
        let c = crystal(0.01, 2.0);
        let m = DetuningModel::default();
        for wp in [0.4e-3, 0.65e-3, 1.3e-3] {
            let p = pump(wp);
            let want = predicted_hwhm(&c, &p, m.center_angle_theta).unwrap();
            let got = measured_hwhm(&m, &c, &p);
            assert!((got / want - 1.0).abs() < 0.02, "wp {wp}: {got} vs {want}");
        }
    }

    #[test]
    fn envelope_bound_and_symmetry() {
        let c = crystal(0.01, 2.5);
        let p = pump(0.65e-3);
        let m = DetuningModel {
            variant: DetuningVariant::ParaxialDegenerate,
            collinear_offset: 30.0,
            ..DetuningModel::default()
        };
        for i in 0..50 {
            let a = [i as f64 * 731.0 - 9000.0, i as f64 * -311.0 + 4000.0];
            let b = [i as f64 * 97.0, -(i as f64) * 503.0];
            let f = two_photon_amplitude(a, b, &m, &c, &p).unwrap();
            let f_swapped = two_photon_amplitude(b, a, &m, &c, &p).unwrap();
            assert!(f.norm() <= 2.5);
            assert_eq!(f, f_swapped);
        }
    }

    #[test]
    fn pump_width_scales_inversely() {
        let base = predicted_hwhm_pump(&pump(0.7e-3)).unwrap();
        for scale in [0.25, 1.5, 3.0] {
            let w = predicted_hwhm_pump(&pump(0.7e-3 * scale)).unwrap();
            assert!((w - base / scale).abs() < 1e-9 * base);
        }
    }
}
