//! Nelder–Mead downhill simplex.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Converged when the spread of simplex values is below
    /// `f_tol · |f_best| + f_abs` and its diameter below `x_tol`, or when the
    /// diameter falls below `x_tol / 1000` whatever the spread.
    pub f_tol: f64,
    pub f_abs: f64,
    pub x_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_iterations: 20_000,
            f_tol: 1e-13,
            f_abs: 1e-300,
            x_tol: 1e-11,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimize `f` starting from `x0`, with initial simplex edges `step`.
pub fn minimize<F>(f: F, x0: &[f64], step: &[f64], opts: &SimplexOptions) -> SimplexResult
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    points.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step[i];
        points.push(p);
    }
    let mut values: Vec<f64> = points.iter().map(|p| eval(p)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        points = order.iter().map(|&i| points[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let diameter = points[1..]
            .iter()
            .map(|p| p.iter().zip(&points[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let flat = spread <= opts.f_tol * values[0].abs() + opts.f_abs;
        // a simplex shrunk to rounding level cannot make further progress
        let collapsed = diameter <= 1e-3 * opts.x_tol;
        if (flat && diameter <= opts.x_tol) || collapsed {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| points[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&points[n])
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let reflected = along(-alpha);
        let f_r = eval(&reflected);
        if f_r < values[0] {
            let expanded = along(-gamma);
            let f_e = eval(&expanded);
            if f_e < f_r {
                points[n] = expanded;
                values[n] = f_e;
            } else {
                points[n] = reflected;
                values[n] = f_r;
            }
            continue;
        }
        if f_r < values[n - 1] {
            points[n] = reflected;
            values[n] = f_r;
            continue;
        }
        let (contracted, f_c) = if f_r < values[n] {
            let c = along(-rho);
            let v = eval(&c);
            (c, v)
        } else {
            let c = along(rho);
            let v = eval(&c);
            (c, v)
        };
        if f_c < values[n].min(f_r) {
            points[n] = contracted;
            values[n] = f_c;
            continue;
        }
        let best = points[0].clone();
        for i in 1..=n {
            points[i] = best
                .iter()
                .zip(&points[i])
                .map(|(b, p)| b + sigma * (p - b))
                .collect();
            values[i] = eval(&points[i]);
        }
    }
    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    SimplexResult {
        x: points[best].clone(),
        value: values[best],
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_rosenbrock_minimum() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let res = minimize(rosen, &[-1.2, 1.0], &[0.5, 0.5], &SimplexOptions::default());
        assert!(res.converged);
        assert!((res.x[0] - 1.0).abs() < 1e-6 && (res.x[1] - 1.0).abs() < 1e-6, "{:?}", res.x);
    }

    #[test]
    fn reports_non_convergence() {
        let opts = SimplexOptions {
            max_iterations: 3,
            ..SimplexOptions::default()
        };
        let res = minimize(|x: &[f64]| x[0] * x[0], &[5.0], &[1.0], &opts);
        assert!(!res.converged);
    }
}
