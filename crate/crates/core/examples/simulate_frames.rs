//! Simulate a few detector frames and store them as 16-bit PGM files.
//!
//! Usage: `cargo run --example simulate_frames [output-dir]`

use std::path::PathBuf;

use pdc_speckle::config::parse_config;
use pdc_speckle::frameio::{read_frames, write_frame};
use pdc_speckle::simulator::Simulator;
use pdc_speckle::Result;

const CONFIG: &str = "
crystal_length = 1 cm
wp_mm = 0.65
g = 2
grid_n = 64
bin = 2
model = diagonal
temporal_modes = 20
frames = 3
";

fn main() -> Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("pdc-frames"));
    let cfg = parse_config(CONFIG)?;
    let hash = cfg.hash();
    let sim = Simulator::new(cfg.setup()?, cfg.fidelity)?;
    std::fs::create_dir_all(&out)?;

    for i in 0..cfg.frames {
        let frame = sim.frame(i as u64, &cfg.detector)?;
        let path = write_frame(&frame, &out, &format!("frame_{i:05}"), &hash)?;
        println!(
            "{}: {}x{} px, g = {:.3}, mean {:.1} counts",
            path.display(),
            frame.cols(),
            frame.rows(),
            frame.meta.g,
            frame.mean_count()
        );
    }

    // reading back verifies every data hash against its sidecar
    let stored = read_frames(&out)?;
    println!("read {} frames back, config {}", stored.len(), &stored[0].config_hash[..12]);
    Ok(())
}
