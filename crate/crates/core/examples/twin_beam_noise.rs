//! Sub-shot-noise intensity difference between the twin beams.
//!
//! A perfect detector leaves the signal–idler difference far below shot
//! noise; quantum efficiency and read noise push it back toward one.

use pdc_speckle::analysis::{default_regions, ssn_sigma};
use pdc_speckle::config::parse_config;
use pdc_speckle::simulator::{DetectorParams, Simulator};
use pdc_speckle::Result;

fn main() -> Result<()> {
    let cfg = parse_config(
        "crystal_length = 1 cm\nwp_mm = 0.65\ng = 1.5\ngrid_n = 64\nbin = 2\nmodel = diagonal\n\
         temporal_modes = 50\npower_jitter = 0\n",
    )?;
    let sim = Simulator::new(cfg.setup()?, cfg.fidelity)?;
    let detectors = [
        ("ideal", DetectorParams::transparent()),
        ("eta 0.8", DetectorParams { read_noise_electrons: 0.0, ..DetectorParams::default() }),
        ("eta 0.8 + read noise", DetectorParams::default()),
        ("eta 0.3", DetectorParams { quantum_efficiency_eta: 0.3, read_noise_electrons: 0.0, ..DetectorParams::default() }),
    ];
    println!("{:<22} {:>10} {:>12}", "detector", "mean", "σ²/(N1+N2)");
    for (name, det) in detectors {
        let frame = sim.frame(0, &det)?;
        let (r1, r2) = default_regions(&frame, 2)?;
        let s = ssn_sigma(&frame, &r1, &r2)?;
        // ideal-loss expectation is 1 − η
        println!("{name:<22} {:>10.1} {:>12.3}", frame.mean_count(), s.normalized);
    }
    Ok(())
}
