//! Analytic coherence widths of the two-photon kernel.
//!
//! Prints the pump-limited and phase-matching-limited widths for a range of
//! pump waists, which of the two sets the low-gain speckle size, and the
//! mean photon number per mode at a few gains.

use pdc_speckle::kernel::{
    mean_photons_per_mode, predicted_hwhm, predicted_hwhm_pump, predicted_hwhm_sinc, regime_ratio, CrystalParams,
    PumpParams,
};
use pdc_speckle::{ModeGrid, Result};

fn main() -> Result<()> {
    let crystal = CrystalParams {
        length_l: 0.01,
        refractive_index_n: 1.66,
        chi2_gain_g: 1.0,
    };
    let theta = 0.05f64.atan();
    let pixel = ModeGrid::for_detector(128, 128, 1, 710e-9, 0.1, 20e-6)?.pixel_dq();

    println!("phase-matching width: {:.0} rad/m", predicted_hwhm_sinc(&crystal, theta)?);
    println!("{:>8} {:>12} {:>8} {:>10}", "wp (mm)", "pump (rad/m)", "ratio", "width (px)");
    for wp_mm in [0.2, 0.4, 0.65, 1.0, 1.3] {
        let pump = PumpParams {
            waist_wp: wp_mm * 1e-3,
            wavelength_p: 355e-9,
            peak_power: 0.78e6,
        };
        println!(
            "{wp_mm:>8.2} {:>12.0} {:>8.3} {:>10.2}",
            predicted_hwhm_pump(&pump)?,
            regime_ratio(&crystal, &pump, theta)?,
            predicted_hwhm(&crystal, &pump, theta)? / pixel,
        );
    }

    println!("\n{:>4} {:>12}", "g", "sinh²(g)");
    for g in [0.1, 1.0, 2.0, 3.0, 4.0] {
        println!("{g:>4.1} {:>12.4}", mean_photons_per_mode(g)?);
    }
    Ok(())
}
