//! Small dense Levenberg–Marquardt solver with box bounds and a
//! central-difference Jacobian.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub(crate) struct LmOptions {
    pub max_iterations: usize,
    /// Stop when every accepted step moves each coordinate by less than this.
    pub step_tolerance: f64,
    pub diff_step: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            step_tolerance: 1e-10,
            diff_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LmOutcome {
    pub x: Vec<f64>,
    /// Half the sum of squared residuals.
    pub cost: f64,
    pub converged: bool,
}

fn cost_of(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*lo, *hi);
    }
}

pub(crate) fn minimize<F>(
    residual: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: LmOptions,
) -> LmOutcome
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, lower, upper);
    let mut r = residual(&x);
    let mut cost = cost_of(&r);
    let mut lambda = 1e-3;

    for _ in 0..opts.max_iterations {
        if cost == 0.0 {
            return LmOutcome { x, cost, converged: true };
        }
        let m = r.len();
        let mut jac = DMatrix::zeros(m, n);
        for j in 0..n {
            let h = opts.diff_step * (1.0 + x[j].abs());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let rp = residual(&xp);
            let rm = residual(&xm);
            for i in 0..m {
                jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let rv = DVector::from_column_slice(&r);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * rv;
        if grad.amax() < 1e-300 {
            return LmOutcome { x, cost, converged: true };
        }

        let mut accepted = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for d in 0..n {
                a[(d, d)] += lambda * jtj[(d, d)].max(1e-12);
            }
            let Some(step) = a.lu().solve(&(-&grad)) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            project(&mut trial, lower, upper);
            let rt = residual(&trial);
            let ct = cost_of(&rt);
            if ct.is_finite() && ct < cost {
                let moved = trial
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                let improvement = (cost - ct) / cost;
                x = trial;
                r = rt;
                cost = ct;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if moved < opts.step_tolerance || improvement < 1e-15 {
                    return LmOutcome { x, cost, converged: true };
                }
                break;
            }
            lambda *= 2.0;
            if lambda > 1e16 {
                break;
            }
        }
        if !accepted {
            // No descent direction left at any damping: a stationary point.
            return LmOutcome { x, cost, converged: true };
        }
    }
    LmOutcome {
        x,
        cost,
        converged: false,
    }
}
