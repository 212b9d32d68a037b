use ndarray::{Array2, Zip};
use num_complex::Complex64;

use super::{sample_vacuum, ComplexField, FarFieldIntensity, FieldOrdering, SimFidelity, SimModel, SimSetup};
use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::kernel::{self, DetuningVariant};
use crate::seed;

/// Largest parametric gain a single split-step slice may carry.
pub const MAX_STEP_GAIN: f64 = 0.2;

/// Two-mode squeezing of a signal/idler amplitude pair.
pub fn bogoliubov_pair(a_s: Complex64, a_i: Complex64, g_eff: f64) -> (Complex64, Complex64) {
    let (c, s) = (g_eff.cosh(), g_eff.sinh());
    (c * a_s + s * a_i.conj(), c * a_i + s * a_s.conj())
}

pub(crate) fn check_step_size(setup: &SimSetup, fidelity: &SimFidelity) -> Result<()> {
    let per_step = setup.crystal.chi2_gain_g / fidelity.n_z_steps as f64;
    if per_step > MAX_STEP_GAIN {
        return Err(Error::InvalidParameter {
            name: "n_z_steps",
            reason: format!(
                "gain per step {per_step:.3} exceeds {MAX_STEP_GAIN}; use at least {} steps",
                (setup.crystal.chi2_gain_g / MAX_STEP_GAIN).ceil()
            ),
        });
    }
    Ok(())
}

pub(crate) fn check_light_cone(setup: &SimSetup) -> Result<()> {
    let k = kernel::degenerate_k(&setup.crystal, &setup.pump);
    kernel::longitudinal_from_k(setup.grid.q_max(), k).map(|_| ())
}

fn require_model(fidelity: &SimFidelity, model: SimModel) -> Result<()> {
    if fidelity.model != model {
        return Err(Error::InvalidParameter {
            name: "model",
            reason: format!("expected {} fidelity, got {}", model.name(), fidelity.model.name()),
        });
    }
    Ok(())
}

/// One temporal mode of the mode-diagonal model.
pub fn simulate_diagonal(setup: &SimSetup, fidelity: &SimFidelity, seed: u64) -> Result<FarFieldIntensity> {
    require_model(fidelity, SimModel::DiagonalBogoliubov)?;
    setup.validate()?;
    check_light_cone(setup)?;
    let plan = Fft2::new(setup.grid.n_y, setup.grid.n_x);
    Ok(realize(setup, fidelity, &plan, seed))
}

/// One temporal mode of the split-step model.
pub fn simulate_split_step(setup: &SimSetup, fidelity: &SimFidelity, seed: u64) -> Result<FarFieldIntensity> {
    require_model(fidelity, SimModel::SplitStep)?;
    setup.validate()?;
    fidelity.validate()?;
    check_step_size(setup, fidelity)?;
    check_light_cone(setup)?;
    let plan = Fft2::new(setup.grid.n_y, setup.grid.n_x);
    Ok(realize(setup, fidelity, &plan, seed))
}

pub(crate) fn realize(setup: &SimSetup, fidelity: &SimFidelity, plan: &Fft2, seed: u64) -> FarFieldIntensity {
    let grid = setup.grid;
    let transform = |s: &mut ComplexField, i: &mut ComplexField| match fidelity.model {
        SimModel::DiagonalBogoliubov => diagonal_transform(setup, s, i),
        SimModel::SplitStep => split_step_transform(setup, fidelity.n_z_steps, plan, s, i),
    };
    match fidelity.ordering {
        FieldOrdering::Symmetric => {
            let (mut s, mut i) = sample_vacuum(grid, seed);
            transform(&mut s, &mut i);
            FarFieldIntensity {
                signal: s.values.mapv(|v| v.norm_sqr() - 0.5),
                idler: i.values.mapv(|v| v.norm_sqr() - 0.5),
            }
        }
        FieldOrdering::Normal => {
            // The output signal is U a_s + V a_i*; its P distribution is that of
            // V c* with c of unit variance. Likewise for the idler.
            let mut rng = seed::rng(seed, &[]);
            let c_signal = ComplexField::gaussian(grid, 1.0, &mut rng);
            let c_idler = ComplexField::gaussian(grid, 1.0, &mut rng);

            let mut s = ComplexField::zeros(grid);
            let mut i = c_idler;
            transform(&mut s, &mut i);
            let signal = s.values.mapv(|v| v.norm_sqr());

            let mut s = c_signal;
            let mut i = ComplexField::zeros(grid);
            transform(&mut s, &mut i);
            let idler = i.values.mapv(|v| v.norm_sqr());
            FarFieldIntensity { signal, idler }
        }
    }
}

fn diagonal_transform(setup: &SimSetup, signal: &mut ComplexField, idler: &mut ComplexField) {
    let grid = setup.grid;
    let g = setup.crystal.chi2_gain_g;
    let l = setup.crystal.length_l;
    let k_deg = kernel::degenerate_k(&setup.crystal, &setup.pump);
    let detuning = setup.detuning;
    let src_i = idler.values.clone();
    let src_s = signal.values.clone();
    for row in 0..grid.n_y {
        for col in 0..grid.n_x {
            let (qx, qy) = grid.q_at(row, col);
            let q_sq = qx * qx + qy * qy;
            let dk = match detuning.variant {
                DetuningVariant::Ideal => 0.0,
                DetuningVariant::ParaxialDegenerate => {
                    kernel::paraxial_detuning(q_sq, q_sq, k_deg, detuning.collinear_offset)
                }
            };
            let g_eff = g * kernel::sinc(dk * l / 2.0);
            let mirror = grid.mirror_index(row, col);
            let (a_s, a_i) = bogoliubov_pair(src_s[(row, col)], src_i[mirror], g_eff);
            signal.values[(row, col)] = a_s;
            idler.values[mirror] = a_i;
        }
    }
}

/// Diffraction factor `exp(−i (|q|²/2k − Δk₀/2) Δz)` on the far-field grid.
fn diffraction_phase(setup: &SimSetup, dz: f64) -> Option<Array2<Complex64>> {
    if setup.detuning.variant == DetuningVariant::Ideal {
        return None;
    }
    let grid = setup.grid;
    let k_deg = kernel::degenerate_k(&setup.crystal, &setup.pump);
    let offset = setup.detuning.collinear_offset;
    Some(Array2::from_shape_fn(grid.shape(), |(r, c)| {
        let (qx, qy) = grid.q_at(r, c);
        let phase = ((qx * qx + qy * qy) / (2.0 * k_deg) - offset / 2.0) * dz;
        Complex64::from_polar(1.0, -phase)
    }))
}

fn split_step_transform(
    setup: &SimSetup,
    n_z: usize,
    plan: &Fft2,
    signal: &mut ComplexField,
    idler: &mut ComplexField,
) {
    let grid = setup.grid;
    let dz = setup.crystal.length_l / n_z as f64;
    let step_gain = setup.crystal.chi2_gain_g / n_z as f64;
    let wp_sq = setup.pump.waist_wp * setup.pump.waist_wp;
    let (cosh, sinh): (Array2<f64>, Array2<f64>) = {
        let local = Array2::from_shape_fn(grid.shape(), |(r, c)| {
            let (x, y) = grid.rho_at(r, c);
            step_gain * (-(x * x + y * y) / wp_sq).exp()
        });
        (local.mapv(f64::cosh), local.mapv(f64::sinh))
    };
    let half = diffraction_phase(setup, dz / 2.0);
    let full = diffraction_phase(setup, dz);
    let (s, i) = (&mut signal.values, &mut idler.values);

    if let Some(h) = &half {
        *s *= h;
        *i *= h;
    }
    plan.inverse_centered(s);
    plan.inverse_centered(i);
    for step in 0..n_z {
        Zip::from(&mut *s)
            .and(&mut *i)
            .and(&cosh)
            .and(&sinh)
            .for_each(|a_s, a_i, &c, &sh| {
                let (ns, ni) = (c * *a_s + sh * a_i.conj(), c * *a_i + sh * a_s.conj());
                *a_s = ns;
                *a_i = ni;
            });
        if step + 1 < n_z {
            if let Some(f) = &full {
                plan.forward_centered(s);
                plan.forward_centered(i);
                *s *= f;
                *i *= f;
                plan.inverse_centered(s);
                plan.inverse_centered(i);
            }
        }
    }
    plan.forward_centered(s);
    plan.forward_centered(i);
    if let Some(h) = &half {
        *s *= h;
        *i *= h;
    }
}
