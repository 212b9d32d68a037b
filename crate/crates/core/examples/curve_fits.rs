//! Fitting the three sweep models to synthetic data.

use pdc_speckle::fitting::{fit, CurveData, ModelId};
use pdc_speckle::Result;

fn main() -> Result<()> {
    // mean counts vs pump power: k sinh²(σ √P)
    let powers = [0.1, 0.2, 0.3, 0.45, 0.6, 0.78];
    let counts = CurveData::from_fn(&powers, |p| 250.0 * (1.91 * p.sqrt()).sinh().powi(2));
    report(ModelId::Sinh2, &counts)?;

    // a straight line through a threshold: a (x − b), with a little scatter
    let xs = [1.0, 1.5, 2.0, 2.5, 3.0];
    let line = CurveData::new(xs.to_vec(), vec![1.41, 2.38, 3.42, 4.39, 5.40]);
    report(ModelId::LinearShifted, &line)?;

    // speckle radius vs pump waist: a wp^b
    let waists = [0.4, 0.55, 0.7, 0.85, 1.0, 1.3];
    let radius = CurveData::from_fn(&waists, |w| 1.6 * w.powf(-1.0));
    report(ModelId::PowerLaw, &radius)?;
    Ok(())
}

fn report(model: ModelId, data: &CurveData) -> Result<()> {
    let r = fit(model, data)?;
    print!("{:<10}", model.name());
    for ((name, v), e) in r.names.iter().zip(&r.params).zip(&r.param_errs) {
        print!(" {name} = {v:.4} ± {e:.1e}");
    }
    println!("  (rms {:.2e})", r.residual_rms);
    Ok(())
}
