//! Pump-power sweep with a fitted gain curve, written as CSV tables.
//!
//! Usage: `cargo run --example power_sweep [output-dir]`

use std::path::PathBuf;

use pdc_speckle::config::parse_config;
use pdc_speckle::sweep::{run_sweep, write_sweep};
use pdc_speckle::Result;

const CONFIG: &str = "
crystal_length = 1 cm
wp_mm = 0.65
g = 1
grid_n = 64
bin = 4
model = diagonal
temporal_modes = 20
frames = 10
power_jitter = 0
sweep = power
sweep_power = 0.1, 0.2, 0.35, 0.5, 0.65, 0.78 MW
";

fn main() -> Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("pdc-sweep"));
    let cfg = parse_config(CONFIG)?;
    let outcome = run_sweep(&cfg)?;
    println!("{:>6} {:>7} {:>10} {:>9}", "P (MW)", "g", "counts", "σ²norm");
    for r in &outcome.records {
        println!(
            "{:>6.2} {:>7.3} {:>10.2} {:>9.3}  {}",
            r.x,
            r.g,
            r.mean_counts.unwrap_or(f64::NAN),
            r.sigma2_norm.unwrap_or(f64::NAN),
            r.status
        );
    }
    match &outcome.fit {
        Ok(f) => println!("sigma = {:.4} (configured {:.4}), k = {:.1}", f.params[1], cfg.sigma, f.params[0]),
        Err(e) => println!("fit failed: {e}"),
    }
    write_sweep(&outcome, &cfg, &out)?;
    println!("tables in {}", out.display());
    Ok(())
}
