//! Acceptance suite: one line per criterion, then a summary.
//!
//! Runs as a plain binary (`harness = false`) so the report is always shown.
//! A criterion listed in `EXPECTED_FAIL` is still evaluated in full and
//! reported as FAIL; the process only fails if some other criterion fails, or
//! if an expected failure stops agreeing with the physics that explains it.

use std::process::ExitCode;
use std::time::Instant;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pdc_speckle::analysis::{auto_correlation_of, cross_correlation_of, CorrelationOptions, Method};
use pdc_speckle::config::parse_config;
use pdc_speckle::fitting::{fit_linear_shifted, fit_power_law, fit_sinh2, CurveData};
use pdc_speckle::frameio::encode_pgm;
use pdc_speckle::simulator::{bogoliubov_pair, Simulator};
use pdc_speckle::sweep::{measure_intensity, run_sweep, simulate_and_measure};

/// The low-gain intensity auto-correlation is √2 wider than the target width;
/// see `criterion_1`.
const EXPECTED_FAIL: &[u32] = &[1];

struct Outcome {
    pass: bool,
    detail: String,
    /// For expected failures: whether the measured value agrees with the
    /// physical explanation of the failure.
    explained: bool,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail, explained: true }
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

const BASE: &str = "crystal_length = 1 cm\nwp_mm = 0.65\npower_jitter = 0\ngrid_n = 128\nbin = 4\n";

/// Low-gain coherence area from split-step speckle at grid resolution.
///
/// The target `√(2 ln 2)/w_p` is the half width of the coincidence
/// probability |F|², i.e. of the signal–idler cross-correlation. The
/// intensity auto-correlation of a single beam is |F ∗ F|², a Gaussian √2
/// wider, so its half width is `2 √(ln 2)/w_p`; the criterion cannot be met by
/// a faithful estimator. We report the measurement and check it against the
/// auto-correlation prediction instead.
fn criterion_1() -> Outcome {
    let cfg = parse_config(&format!(
        "{BASE}g = 0.1\nmodel = split_step\ndetuning = ideal\nordering = normal\ntemporal_modes = 200\n"
    ))
    .unwrap();
    let sim = Simulator::new(cfg.setup().unwrap(), cfg.fidelity).unwrap();
    let m = measure_intensity(&sim, 4, 6).unwrap();
    let grid = cfg.grid().unwrap();
    let hwhm_q = m.radius_px.unwrap() * grid.pixel_dq();
    let wp = cfg.pump.waist_wp;
    let target = (2.0 * 2f64.ln()).sqrt() / wp;
    let auto_theory = 2.0 * 2f64.ln().sqrt() / wp;
    let err = rel(hwhm_q, target);
    Outcome {
        pass: err <= 0.10,
        detail: format!(
            "auto HWHM {hwhm_q:.0} rad/m vs target {target:.0} (off {:.1}%, tol 10%); \
             ratio {:.3} ≈ √2; auto-correlation theory {auto_theory:.0} (off {:.1}%)",
            100.0 * err,
            hwhm_q / target,
            100.0 * rel(hwhm_q, auto_theory)
        ),
        explained: rel(hwhm_q, auto_theory) < 0.05,
    }
}

fn criterion_2() -> Outcome {
    let cfg = parse_config(&format!(
        "{BASE}g = 0.1\nordering = normal\ndetection = ideal\ntemporal_modes = 100\nframes = 8\nmax_lag = 12\n\
         sweep = diameter\nsweep_wp_mm = 0.4,0.5,0.6,0.7,0.8,0.9,1.0,1.1,1.2,1.3\n"
    ))
    .unwrap();
    let out = run_sweep(&cfg).unwrap();
    match out.fit {
        Ok(f) => {
            let b = f.get("b").unwrap();
            outcome(
                (b + 1.0).abs() <= 0.15,
                format!("b = {b:.3} ± {:.3} (want −1.0 ± 0.15)", f.err("b").unwrap()),
            )
        }
        Err(e) => outcome(false, format!("fit failed: {e}")),
    }
}

fn criterion_3() -> Outcome {
    let common = format!("{BASE}ordering = normal\ndetection = ideal\ntemporal_modes = 100\nnz_steps = 32\nmax_lag = 12\n");
    let gains = parse_config(&format!("{common}g = 1\nframes = 30\nsweep = gain\nsweep_g = 1, 3\n")).unwrap();
    let rows = run_sweep(&gains).unwrap().records;
    let (lo, hi) = (&rows[0], &rows[1]);
    let (r1, r3) = (lo.radius_px.unwrap_or(f64::NAN), hi.radius_px.unwrap_or(f64::NAN));
    let sep = (r3 - r1) / lo.radius_px_se.unwrap_or(f64::NAN).hypot(hi.radius_px_se.unwrap_or(f64::NAN));
    let diam = parse_config(&format!(
        "{common}g = 3\nframes = 8\nsweep = diameter\ndiameter_gain = fixed_power\n\
         sweep_wp_mm = 0.4,0.5,0.6,0.7,0.8,0.9,1.0,1.1,1.2,1.3\n"
    ))
    .unwrap();
    let b = run_sweep(&diam).unwrap().fit.map(|f| f.get("b").unwrap());
    let b_val = *b.as_ref().unwrap_or(&f64::NAN);
    outcome(
        sep >= 3.0 && b_val < -1.0,
        format!(
            "radius g=1 {r1:.3} px, g=3 {r3:.3} px, separation {sep:.1}σ (want ≥ 3); \
             fixed-power diameter sweep b = {b_val:.3} (want < −1)"
        ),
    )
}

fn criterion_4() -> Outcome {
    let sigma = 1.91;
    let powers: Vec<String> = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
        .iter()
        .map(|g: &f64| format!("{}", (g / sigma).powi(2)))
        .collect();
    let cfg = parse_config(&format!(
        "{}g = 1\nmodel = diagonal\ntemporal_modes = 20\nframes = 30\nsigma = {sigma}\n\
         sweep = power\nsweep_power_MW = {}\n",
        BASE.replace("grid_n = 128", "grid_n = 64"),
        powers.join(",")
    ))
    .unwrap();
    // each pixel sums bin² modes over M temporal modes, thinned by η
    let k_true = cfg.detector.quantum_efficiency_eta * (cfg.fidelity.temporal_modes_m * cfg.bin * cfg.bin) as f64;
    match run_sweep(&cfg).unwrap().fit {
        Ok(f) => {
            let (k, s) = (f.get("k").unwrap(), f.get("sigma").unwrap());
            outcome(
                rel(s, sigma) <= 0.05 && rel(k, k_true) <= 0.10,
                format!(
                    "σ = {s:.4} (true {sigma}, off {:.2}%, tol 5%); k = {k:.1} (true {k_true}, off {:.2}%, tol 10%)",
                    100.0 * rel(s, sigma),
                    100.0 * rel(k, k_true)
                ),
            )
        }
        Err(e) => outcome(false, format!("fit failed: {e}")),
    }
}

fn criterion_5() -> Outcome {
    let lin = |a: f64, b: f64, n: usize| -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    };
    let mut worst_nl: f64 = 0.0;
    for (k, s, g_lo, g_hi) in [(31.48f64, 1.91f64, 1.5f64, 3.5f64), (1.10, 4.87, 1.9, 5.0)] {
        let xs = lin((g_lo / s).powi(2), (g_hi / s).powi(2), 10);
        let f = fit_sinh2(&CurveData::from_fn(&xs, |p| k * (s * p.sqrt()).sinh().powi(2)), None).unwrap();
        worst_nl = worst_nl.max(rel(f.params[0], k)).max(rel(f.params[1], s));
    }
    let mut worst_cf: f64 = 0.0;
    let ps = lin(0.2, 3.4, 9);
    for (a, b) in [(1.25, -0.63), (3.7, -0.27)] {
        let f = fit_linear_shifted(&CurveData::from_fn(&ps, |x| a * (x - b))).unwrap();
        worst_cf = worst_cf.max(rel(f.params[0], a)).max(rel(f.params[1], b));
    }
    let ds = lin(0.8, 1.6, 9);
    for (a, b) in [(8.1, -3.61), (3.22, -3.73)] {
        let f = fit_power_law(&CurveData::from_fn(&ds, |x| a * x.powf(b))).unwrap();
        worst_cf = worst_cf.max(rel(f.params[0], a)).max(rel(f.params[1], b));
    }
    outcome(
        worst_nl <= 5e-3 && worst_cf <= 1e-12,
        format!("worst sinh² error {worst_nl:.1e} (tol 5e-3); worst closed-form error {worst_cf:.1e} (tol 1e-12)"),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut unit = true;
    let mut c0 = true;
    for _ in 0..5 {
        let a = Array2::from_shape_fn((32, 32), |_| rng.random::<f64>());
        let b = Array2::from_shape_fn((32, 32), |_| rng.random::<f64>() + 0.3 * a[[0, 0]]);
        for lag in [(4, 4), (16, 16), (31, 31)] {
            let with = |method| CorrelationOptions { max_lag: Some(lag), method };
            let pairs = [
                (
                    auto_correlation_of(a.view(), &with(Method::Direct)).unwrap(),
                    auto_correlation_of(a.view(), &with(Method::Fft)).unwrap(),
                ),
                (
                    cross_correlation_of(a.view(), b.view(), &with(Method::Direct)).unwrap(),
                    cross_correlation_of(a.view(), b.view(), &with(Method::Fft)).unwrap(),
                ),
            ];
            for (i, (d, f)) in pairs.iter().enumerate() {
                let scale = d.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let diff = d.values.iter().zip(&f.values).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
                worst = worst.max(diff / scale);
                unit &= d.in_unit_interval() && f.in_unit_interval();
                if i == 0 {
                    c0 &= d.at(0, 0) == Some(1.0) && f.at(0, 0) == Some(1.0);
                }
            }
        }
    }
    outcome(
        worst <= 1e-10 && unit && c0,
        format!("max relative FFT/direct difference {worst:.1e} (tol 1e-10); C(0) = 1: {c0}; all in [−1, 1]: {unit}"),
    )
}

fn criterion_7() -> Outcome {
    let ideal = parse_config(&format!(
        "{BASE}g = 1.5\nmodel = diagonal\ntemporal_modes = 100\nframes = 5\neta = 1\nread_noise = 0\n"
    ))
    .unwrap();
    let (_, m) = simulate_and_measure(&ideal).unwrap();
    let at_mirror = m.per_frame.iter().all(|f| (f.c12_peak_dy, f.c12_peak_dx) == (0, 0));
    let (peak, s2) = (m.c12_peak.unwrap(), m.sigma2_norm.unwrap());
    let mut noisy = ideal.clone();
    noisy.detector.quantum_efficiency_eta = 0.8;
    noisy.detector.read_noise_electrons = 5.0;
    let (_, n) = simulate_and_measure(&noisy).unwrap();
    let degraded = n.c12_peak.unwrap();
    outcome(
        peak >= 0.95 && at_mirror && s2 < 0.1 && (0.75..=0.98).contains(&degraded) && degraded < peak,
        format!(
            "η=1: C12 peak {peak:.4} at mirror point: {at_mirror} (want ≥ 0.95), σ²/⟨N1+N2⟩ {s2:.4} (want < 0.1); \
             η=0.8 + read noise 5: peak {degraded:.4} (want in [0.75, 0.98])"
        ),
    )
}

fn criterion_8() -> Outcome {
    // Absolute over the operating range; beyond g ≈ 4 the f64 spacing of
    // cosh² alone exceeds 1e-12, so larger gains are checked relatively.
    let (mut abs_err, mut rel_err): (f64, f64) = (0.0, 0.0);
    for i in 0..=5000 {
        let g = i as f64 * 1e-3;
        let (s, idl) = bogoliubov_pair(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), g);
        // for unit signal input |a_s|² − |a_i|² = cosh² − sinh²
        let d = (s.norm_sqr() - idl.norm_sqr() - 1.0).abs();
        if g <= 4.0 {
            abs_err = abs_err.max(d);
        }
        rel_err = rel_err.max(d / s.norm_sqr());
    }
    let symplectic = abs_err <= 1e-12 && rel_err <= 1e-15;

    let cfg = parse_config(&format!(
        "{}g = 1.5\ntemporal_modes = 8\nframes = 2\n",
        BASE.replace("grid_n = 128", "grid_n = 64")
    ))
    .unwrap();
    let frames = |cfg: &pdc_speckle::config::ExperimentConfig| {
        let sim = Simulator::new(cfg.setup().unwrap(), cfg.fidelity).unwrap();
        sim.frames(cfg.frames, &cfg.detector).unwrap()
    };
    let (a, b) = (frames(&cfg), frames(&cfg));
    let identical = a == b && a.iter().zip(&b).all(|(x, y)| encode_pgm(&x.counts).unwrap() == encode_pgm(&y.counts).unwrap());

    let flat = |model: &str| {
        let c = parse_config(&format!(
            "crystal_length = 1 cm\nwp = 10 m\ng = 2\ngrid_n = 64\nbin = 4\npower_jitter = 0\nmodel = {model}\ntemporal_modes = 50\n"
        ))
        .unwrap();
        Simulator::new(c.setup().unwrap(), c.fidelity).unwrap().accumulated(0).mean_signal()
    };
    let flat_err = rel(flat("split_step"), flat("diagonal"));

    let steps = |nz: usize| {
        let c = parse_config(&format!(
            "{BASE}g = 3\ndetuning = paraxial\nnz_steps = {nz}\ntemporal_modes = 20\n"
        ))
        .unwrap();
        Simulator::new(c.setup().unwrap(), c.fidelity).unwrap().accumulated(0).mean_signal()
    };
    let step_change = rel(steps(64), steps(32));
    outcome(
        symplectic && identical && flat_err < 0.05 && step_change < 0.01,
        format!(
            "cosh²−sinh² error {abs_err:.1e} for g ≤ 4 (tol 1e-12), relative {rel_err:.1e} for g ≤ 5; identical seeds bit-identical: {identical}; \
             flat-pump split-step vs diagonal {:.2}% (tol 5%); 32→64 z-steps at g=3 {:.1e} (tol 1%)",
            100.0 * flat_err,
            step_change
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 8] = [
        (1, "low-gain coherence area", criterion_1),
        (2, "inverse-waist law", criterion_2),
        (3, "high-gain speckle growth", criterion_3),
        (4, "gain curve", criterion_4),
        (5, "fit regressions", criterion_5),
        (6, "correlation estimator oracle", criterion_6),
        (7, "twin-beam correlation", criterion_7),
        (8, "simulator invariants", criterion_8),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut ok = true;
    let mut passed = 0;
    let mut run = 0;
    for (id, name, check) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        run += 1;
        let start = Instant::now();
        let o = check();
        let secs = start.elapsed().as_secs_f64();
        let expected_fail = EXPECTED_FAIL.contains(&id);
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = match (o.pass, expected_fail) {
            (false, true) if o.explained => " [expected: see analysis]",
            (false, true) => " [expected, but no longer explained]",
            (true, true) => " [expected to fail but passed]",
            _ => "",
        };
        println!("criterion {id} {tag} {name}: {} ({secs:.1} s){note}", o.detail);
        passed += o.pass as usize;
        if (!o.pass && !expected_fail) || (expected_fail && !o.pass && !o.explained) {
            ok = false;
        }
    }
    println!("acceptance: {passed}/{run} criteria passed");
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
