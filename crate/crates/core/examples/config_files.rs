//! Configuration parsing: units, defaults, validation and provenance.

use pdc_speckle::config::parse_config;
use pdc_speckle::Result;

fn main() -> Result<()> {
    let cfg = parse_config(
        "# units go on the key or after the value\n\
         crystal_length = 1 cm\n\
         wp_mm = 0.65\n\
         g = 2.5\n\
         nz_steps = 20\n",
    )?;
    println!("pump waist {} m, crystal {} m", cfg.pump.waist_wp, cfg.crystal.length_l);
    println!("resolved configuration (hash {}):", &cfg.hash()[..16]);
    for (key, value) in cfg.echo() {
        println!("  {key} = {value}");
    }

    for bad in [
        "crystal_length = 1 cm\nwp = 0.65\ng = 1\n",
        "crystal_length = 1 cm\nwp_mm = 0.65\ng = 1\nwaist = 2 mm\n",
        "crystal_length = 1 cm\nwp_mm = 0.65\ng = 3\nnz_steps = 4\n",
    ] {
        let err = parse_config(bad).unwrap_err();
        println!("rejected [{}]: {err}", err.category());
    }
    Ok(())
}
