//! Curve fits for gain curves and speckle-radius trends.
//!
//! * [`fit_sinh2`]: `y = k · sinh²(σ √x)`, mean counts against pump power;
//! * [`fit_linear_shifted`]: `y = a (x − b)`;
//! * [`fit_power_law`]: `y = a · x^b`, fitted as a line in log-log space.
//!
//! Fits are unweighted least squares unless `y_errs` is given, in which case
//! residuals are weighted by `1 / y_err²`. Reported parameter errors are
//! regression standard errors.

mod simplex;

use std::fmt;

pub use simplex::{minimize, SimplexOptions, SimplexResult};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CurveData {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub y_errs: Option<Vec<f64>>,
}

impl CurveData {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        CurveData { xs, ys, y_errs: None }
    }

    pub fn with_errors(mut self, y_errs: Vec<f64>) -> Self {
        self.y_errs = Some(y_errs);
        self
    }

    pub fn from_fn(xs: &[f64], f: impl Fn(f64) -> f64) -> Self {
        CurveData::new(xs.to_vec(), xs.iter().map(|&x| f(x)).collect())
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    fn validate(&self, n_params: usize) -> Result<()> {
        if self.xs.len() != self.ys.len() {
            return Err(Error::Domain(format!(
                "{} abscissae but {} ordinates",
                self.xs.len(),
                self.ys.len()
            )));
        }
        if let Some(e) = &self.y_errs {
            if e.len() != self.xs.len() {
                return Err(Error::Domain("y_errs length differs from data".into()));
            }
            if e.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(Error::Domain("y_errs must be positive and finite".into()));
            }
        }
        if self.xs.len() < n_params + 1 {
            return Err(Error::Domain(format!(
                "need at least {} points, got {}",
                n_params + 1,
                self.xs.len()
            )));
        }
        if self.xs.iter().chain(&self.ys).any(|v| !v.is_finite()) {
            return Err(Error::Domain("data contain non-finite values".into()));
        }
        Ok(())
    }

    fn weights(&self) -> Vec<f64> {
        match &self.y_errs {
            Some(e) => e.iter().map(|v| 1.0 / (v * v)).collect(),
            None => vec![1.0; self.xs.len()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelId {
    Sinh2,
    LinearShifted,
    PowerLaw,
}

impl ModelId {
    pub fn name(&self) -> &'static str {
        match self {
            ModelId::Sinh2 => "sinh2",
            ModelId::LinearShifted => "linear",
            ModelId::PowerLaw => "powerlaw",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sinh2" => Ok(ModelId::Sinh2),
            "linear" => Ok(ModelId::LinearShifted),
            "powerlaw" => Ok(ModelId::PowerLaw),
            other => Err(Error::Domain(format!(
                "unknown fit model `{other}` (expected sinh2, linear or powerlaw)"
            ))),
        }
    }

    pub fn evaluate(&self, params: &[f64], x: f64) -> f64 {
        match self {
            ModelId::Sinh2 => params[0] * (params[1] * x.sqrt()).sinh().powi(2),
            ModelId::LinearShifted => params[0] * (x - params[1]),
            ModelId::PowerLaw => params[0] * x.powf(params[1]),
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model_id: ModelId,
    pub names: Vec<&'static str>,
    pub params: Vec<f64>,
    /// Standard errors, same order as `params`.
    pub param_errs: Vec<f64>,
    pub residual_rms: f64,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| *n == name).map(|i| self.params[i])
    }

    pub fn err(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| *n == name).map(|i| self.param_errs[i])
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.model_id.evaluate(&self.params, x)
    }
}

fn residual_rms(model: ModelId, params: &[f64], data: &CurveData) -> f64 {
    let sse: f64 = data
        .xs
        .iter()
        .zip(&data.ys)
        .map(|(&x, &y)| (y - model.evaluate(params, x)).powi(2))
        .sum();
    (sse / data.len() as f64).sqrt()
}

/// Fit `y = k · sinh²(σ √x)`.
///
/// Derivative-free simplex descent over `(ln k, ln σ)` from a deterministic
/// set of starts, `σ₀ ∈ {0.5, 1, 2, 4, 8}` with `k₀ = max(y) / sinh²(σ₀ √max(x))`,
/// plus `init` when given. The best local minimum is polished by restarting
/// the simplex around it.
pub fn fit_sinh2(data: &CurveData, init: Option<(f64, f64)>) -> Result<FitResult> {
    data.validate(2)?;
    if data.xs.iter().any(|&x| x < 0.0) {
        return Err(Error::Domain("gain-curve abscissae must be non-negative".into()));
    }
    let x_max = data.xs.iter().cloned().fold(0.0, f64::max);
    let y_max = data.ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(x_max > 0.0 && y_max > 0.0) {
        return Err(Error::Domain("gain curve needs positive x and y values".into()));
    }
    let weights = data.weights();
    let cost = |theta: &[f64]| -> f64 {
        let (k, sigma) = (theta[0].exp(), theta[1].exp());
        data.xs
            .iter()
            .zip(&data.ys)
            .zip(&weights)
            .map(|((&x, &y), &w)| w * (y - k * (sigma * x.sqrt()).sinh().powi(2)).powi(2))
            .sum()
    };

    let mut starts: Vec<(f64, f64)> = [0.5, 1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|&s0: &f64| (y_max / (s0 * x_max.sqrt()).sinh().powi(2), s0))
        .filter(|(k, _)| k.is_finite() && *k > 0.0)
        .collect();
    if let Some((k, s)) = init {
        if k > 0.0 && s > 0.0 {
            starts.push((k, s));
        }
    }

    // cost differences below this are floating-point noise in the residuals
    let noise_floor = 1e-24 * data.ys.iter().zip(&weights).map(|(y, w)| w * y * y).sum::<f64>();
    let opts = SimplexOptions {
        f_abs: noise_floor,
        ..SimplexOptions::default()
    };
    let mut best: Option<SimplexResult> = None;
    let mut total_iterations = 0;
    for (k0, s0) in starts {
        let mut res = minimize(&cost, &[k0.ln(), s0.ln()], &[0.5, 0.2], &opts);
        total_iterations += res.iterations;
        // restarts shake the simplex out of premature collapse
        for _ in 0..3 {
            let again = minimize(&cost, &res.x, &[0.05, 0.02], &opts);
            total_iterations += again.iterations;
            let improved = again.value < res.value;
            if improved {
                res = again;
            } else {
                res.converged |= again.converged;
                break;
            }
        }
        if best.as_ref().is_none_or(|b| res.value < b.value) {
            best = Some(res);
        }
    }
    let best = best.ok_or_else(|| Error::FitUndefined("no usable starting point".into()))?;
    let params = vec![best.x[0].exp(), best.x[1].exp()];
    if !best.converged || params.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonConvergence {
            iterations: total_iterations,
            best_rms: residual_rms(ModelId::Sinh2, &params, data),
            best_params: params,
        });
    }

    let (k, sigma) = (params[0], params[1]);
    let jac: Vec<[f64; 2]> = data
        .xs
        .iter()
        .map(|&x| {
            let u = sigma * x.sqrt();
            [u.sinh().powi(2), k * (2.0 * u).sinh() * x.sqrt()]
        })
        .collect();
    let param_errs = nonlinear_errors(&jac, &weights, best.value, data.len());
    Ok(FitResult {
        model_id: ModelId::Sinh2,
        names: vec!["k", "sigma"],
        residual_rms: residual_rms(ModelId::Sinh2, &params, data),
        params,
        param_errs,
    })
}

/// Standard errors from `s² (JᵀWJ)⁻¹` for a two-parameter model.
fn nonlinear_errors(jac: &[[f64; 2]], weights: &[f64], sse: f64, n: usize) -> Vec<f64> {
    let (mut a, mut b, mut d) = (0.0, 0.0, 0.0);
    for (j, &w) in jac.iter().zip(weights) {
        a += w * j[0] * j[0];
        b += w * j[0] * j[1];
        d += w * j[1] * j[1];
    }
    let det = a * d - b * b;
    let dof = n.saturating_sub(2).max(1) as f64;
    let s2 = sse / dof;
    if det <= 0.0 {
        return vec![f64::NAN, f64::NAN];
    }
    vec![(s2 * d / det).sqrt(), (s2 * a / det).sqrt()]
}

/// Weighted straight-line regression `y = slope · x + intercept`.
#[derive(Debug, Clone, Copy)]
struct LineFit {
    slope: f64,
    intercept: f64,
    var_slope: f64,
    var_intercept: f64,
    cov: f64,
}

fn fit_line(xs: &[f64], ys: &[f64], weights: &[f64]) -> Result<LineFit> {
    let sw: f64 = weights.iter().sum();
    let x_bar = xs.iter().zip(weights).map(|(x, w)| w * x).sum::<f64>() / sw;
    let y_bar = ys.iter().zip(weights).map(|(y, w)| w * y).sum::<f64>() / sw;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for ((&x, &y), &w) in xs.iter().zip(ys).zip(weights) {
        sxx += w * (x - x_bar) * (x - x_bar);
        sxy += w * (x - x_bar) * (y - y_bar);
    }
    if sxx <= 0.0 {
        return Err(Error::FitUndefined("need at least two distinct x values".into()));
    }
    let slope = sxy / sxx;
    let intercept = y_bar - slope * x_bar;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .zip(weights)
        .map(|((&x, &y), &w)| w * (y - slope * x - intercept).powi(2))
        .sum();
    let n = xs.len();
    let s2 = if n > 2 { sse / (n - 2) as f64 } else { 0.0 };
    Ok(LineFit {
        slope,
        intercept,
        var_slope: s2 / sxx,
        var_intercept: s2 * (1.0 / sw + x_bar * x_bar / sxx),
        cov: -x_bar * s2 / sxx,
    })
}

/// Fit `y = a (x − b)` in closed form.
pub fn fit_linear_shifted(data: &CurveData) -> Result<FitResult> {
    data.validate(1)?;
    let line = fit_line(&data.xs, &data.ys, &data.weights())?;
    let a = line.slope;
    let y_scale = data.ys.iter().map(|y| y.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let x_span = data.xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - data.xs.iter().cloned().fold(f64::INFINITY, f64::min);
    if a.abs() <= 1e-13 * y_scale / x_span {
        return Err(Error::FitUndefined("slope is zero, so the x-intercept b is undefined".into()));
    }
    let c = line.intercept;
    let b = -c / a;
    let var_b = line.var_intercept / (a * a) + c * c * line.var_slope / a.powi(4)
        - 2.0 * c * line.cov / a.powi(3);
    let params = vec![a, b];
    Ok(FitResult {
        model_id: ModelId::LinearShifted,
        names: vec!["a", "b"],
        residual_rms: residual_rms(ModelId::LinearShifted, &params, data),
        params,
        param_errs: vec![line.var_slope.sqrt(), var_b.max(0.0).sqrt()],
    })
}

/// Fit `y = a · x^b` by linear regression of `ln y` on `ln x`.
pub fn fit_power_law(data: &CurveData) -> Result<FitResult> {
    data.validate(1)?;
    if data.xs.iter().chain(&data.ys).any(|&v| v <= 0.0) {
        return Err(Error::Domain("power-law fit needs strictly positive x and y".into()));
    }
    let lx: Vec<f64> = data.xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = data.ys.iter().map(|y| y.ln()).collect();
    // an error e on y is e / y on ln y
    let weights: Vec<f64> = match &data.y_errs {
        Some(e) => e.iter().zip(&data.ys).map(|(e, y)| (y / e).powi(2)).collect(),
        None => vec![1.0; data.len()],
    };
    let line = fit_line(&lx, &ly, &weights)?;
    let a = line.intercept.exp();
    let params = vec![a, line.slope];
    Ok(FitResult {
        model_id: ModelId::PowerLaw,
        names: vec!["a", "b"],
        residual_rms: residual_rms(ModelId::PowerLaw, &params, data),
        params,
        param_errs: vec![a * line.var_intercept.sqrt(), line.var_slope.sqrt()],
    })
}

/// Dispatch on [`ModelId`].
pub fn fit(model: ModelId, data: &CurveData) -> Result<FitResult> {
    match model {
        ModelId::Sinh2 => fit_sinh2(data, None),
        ModelId::LinearShifted => fit_linear_shifted(data),
        ModelId::PowerLaw => fit_power_law(data),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a / b - 1.0).abs()
    }

    #[test]
    fn sinh2_identity_generator() {
        let xs: Vec<f64> = (1..=10).map(|i| i as f64 * 0.3).collect();
        let data = CurveData::from_fn(&xs, |x| x.sqrt().sinh().powi(2));
        let fit = fit_sinh2(&data, None).unwrap();
        assert!(rel(fit.get("k").unwrap(), 1.0) < 1e-6, "{fit:?}");
        assert!(rel(fit.get("sigma").unwrap(), 1.0) < 1e-6, "{fit:?}");
        assert!(fit.residual_rms < 1e-6);
    }

    #[test]
    fn sinh2_rejects_bad_input() {
        let few = CurveData::new(vec![1.0, 2.0], vec![1.0, 2.0]);
        assert!(fit_sinh2(&few, None).is_err());
        let neg = CurveData::new(vec![-1.0, 1.0, 2.0], vec![1.0, 2.0, 3.0]);
        assert!(fit_sinh2(&neg, None).is_err());
    }

    #[test]
    fn linear_errors_and_exactness() {
        let flat = CurveData::new(vec![0.0, 1.0, 2.0], vec![3.0, 3.0, 3.0]);
        assert!(matches!(fit_linear_shifted(&flat), Err(Error::FitUndefined(_))));
        let same_x = CurveData::new(vec![1.0, 1.0, 1.0], vec![1.0, 2.0, 3.0]);
        assert!(fit_linear_shifted(&same_x).is_err());
        let two = CurveData::new(vec![1.0, 3.0], vec![2.0, 6.0]);
        let fit = fit_linear_shifted(&two).unwrap();
        assert_eq!(fit.params, vec![2.0, 0.0]);
    }

    #[test]
    fn power_law_domain() {
        let bad = CurveData::new(vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 3.0]);
        assert!(matches!(fit_power_law(&bad), Err(Error::Domain(_))));
        let inv = CurveData::from_fn(&[0.5, 1.0, 2.0, 4.0], |x| 1.0 / x);
        let fit = fit_power_law(&inv).unwrap();
        assert!((fit.get("a").unwrap() - 1.0).abs() < 1e-14);
        assert!((fit.get("b").unwrap() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn weights_downweight_outlier() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let mut ys: Vec<f64> = xs.iter().map(|x| 2.0 * (x - 0.5)).collect();
        ys[4] += 5.0;
        let data = CurveData::new(xs.to_vec(), ys.clone());
        let heavy = data.clone().with_errors(vec![0.01, 0.01, 0.01, 0.01, 100.0]);
        let plain = fit_linear_shifted(&data).unwrap();
        let weighted = fit_linear_shifted(&heavy).unwrap();
        assert!((weighted.get("a").unwrap() - 2.0).abs() < (plain.get("a").unwrap() - 2.0).abs());
    }

    #[test]
    fn model_names_round_trip() {
        for m in [ModelId::Sinh2, ModelId::LinearShifted, ModelId::PowerLaw] {
            assert_eq!(ModelId::parse(m.name()).unwrap(), m);
        }
        assert!(ModelId::parse("cubic").is_err());
    }
}
