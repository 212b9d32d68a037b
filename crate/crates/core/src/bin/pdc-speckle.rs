//! Command-line front end: `simulate`, `analyze`, `fit` and `sweep`.
//!
//! Failures print `error[<category>]: <message>` on stderr and exit with the
//! category's code (config 2, geometry 3, analysis 4, fit 5, scaling 6,
//! integrity 7, io 10).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use pdc_speckle::analysis::{Region, RegionRole};
use pdc_speckle::config::read_config;
use pdc_speckle::fitting::{fit, CurveData, ModelId};
use pdc_speckle::frameio::{read_csv, read_frames, write_csv, write_frame};
use pdc_speckle::simulator::Simulator;
use pdc_speckle::sweep::{fit_records, measure, regions_for, run_sweep, write_sweep};
use pdc_speckle::Result;

#[derive(Parser)]
#[command(name = "pdc-speckle", version, about = "Twin-beam speckle simulator and analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate detected frames from a configuration file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `frames` from the configuration.
        #[arg(long)]
        frames: Option<usize>,
        /// Overrides `seed` from the configuration.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Measure correlations and twin-beam noise on a directory of frames.
    Analyze {
        #[arg(long)]
        frames: PathBuf,
        /// Signal region `row,col,height,width`; default is the inset signal image.
        #[arg(long)]
        r1: Option<String>,
        /// Idler region `row,col,height,width`; default is the reflection of r1.
        #[arg(long)]
        r2: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        max_lag: usize,
        #[arg(long, default_value_t = 2)]
        margin: usize,
    },
    /// Fit a model to a CSV with columns `x,y` and optional `y_err`.
    Fit {
        #[arg(long, value_parser = ["sinh2", "linear", "powerlaw"])]
        model: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the sweep described in a configuration file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Deserialize)]
struct Point {
    x: f64,
    y: f64,
    #[serde(default)]
    y_err: Option<f64>,
}

fn simulate(config: &Path, out: &Path, frames: Option<usize>, seed: Option<u64>) -> Result<()> {
    let mut cfg = read_config(config)?;
    if let Some(n) = frames {
        cfg.frames = n;
    }
    if let Some(s) = seed {
        cfg.fidelity.rng_seed = s;
    }
    let echo = cfg.echo_text();
    print!("{echo}");
    let hash = cfg.hash();
    println!("config_hash = {hash}");
    let sim = Simulator::new(cfg.setup()?, cfg.fidelity)?;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("config.resolved"), format!("{echo}config_hash = {hash}\n"))?;
    for i in 0..cfg.frames {
        let frame = sim.frame(i as u64, &cfg.detector)?;
        write_frame(&frame, out, &format!("frame_{i:05}"), &hash)?;
    }
    eprintln!("wrote {} frames to {}", cfg.frames, out.display());
    Ok(())
}

fn analyze(dir: &Path, r1: Option<&str>, r2: Option<&str>, out: &Path, max_lag: usize, margin: usize) -> Result<()> {
    let frames: Vec<_> = read_frames(dir)?.into_iter().map(|s| s.frame).collect();
    let r1 = r1.map(|s| Region::parse(s, RegionRole::Signal)).transpose()?;
    let (r1, mirrored) = regions_for(&frames[0], r1, margin, 0)?;
    let r2 = match r2 {
        Some(s) => Region::parse(s, RegionRole::Idler)?,
        None => mirrored,
    };
    let m = measure(&frames, &r1, &r2, max_lag)?;
    write_csv(out, &m.per_frame)?;
    println!("frames = {}", m.frames);
    println!("mean_counts = {} ± {}", m.mean_counts, m.mean_counts_se);
    match m.radius_px {
        Some(r) => println!("radius_px = {r}"),
        None => println!("radius_px = undefined"),
    }
    let show = |v: Option<f64>| v.map_or("undefined".to_string(), |v| v.to_string());
    println!("c12_peak = {}", show(m.c12_peak));
    println!("sigma2 = {}", show(m.sigma2));
    println!("sigma2_norm = {} ± {}", show(m.sigma2_norm), show(m.sigma2_norm_se));
    Ok(())
}

fn fit_cmd(model: &str, input: &Path, out: &Path) -> Result<()> {
    let model = ModelId::parse(model)?;
    let points: Vec<Point> = read_csv(input)?;
    let mut data = CurveData::new(points.iter().map(|p| p.x).collect(), points.iter().map(|p| p.y).collect());
    if points.iter().all(|p| p.y_err.is_some()) && !points.is_empty() {
        data = data.with_errors(points.iter().map(|p| p.y_err.unwrap()).collect());
    }
    let result = fit(model, &data)?;
    let rows = fit_records(&result);
    for r in &rows {
        println!("{} = {} ± {}", r.param, r.value, r.stderr);
    }
    println!("residual_rms = {}", result.residual_rms);
    write_csv(out, &rows)
}

fn sweep(config: &Path, out: &Path) -> Result<()> {
    let cfg = read_config(config)?;
    print!("{}", cfg.echo_text());
    println!("config_hash = {}", cfg.hash());
    let outcome = run_sweep(&cfg)?;
    write_sweep(&outcome, &cfg, out)?;
    for r in &outcome.records {
        eprintln!("point {} x={} {} g={:.4}: {}", r.index, r.x, r.x_unit, r.g, r.status);
    }
    match &outcome.fit {
        Ok(f) => {
            for (name, (v, e)) in f.names.iter().zip(f.params.iter().zip(&f.param_errs)) {
                println!("fit {} = {v} ± {e}", name);
            }
        }
        Err(e) => eprintln!("fit skipped: {e}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { config, out, frames, seed } => simulate(config, out, *frames, *seed),
        Command::Analyze { frames, r1, r2, out, max_lag, margin } => {
            analyze(frames, r1.as_deref(), r2.as_deref(), out, *max_lag, *margin)
        }
        Command::Fit { model, input, out } => fit_cmd(model, input, out),
        Command::Sweep { config, out } => sweep(config, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
