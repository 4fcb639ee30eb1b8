use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Converged once an accepted step changes every parameter by less than
    /// this fraction of its magnitude.
    pub relative_step: f64,
    /// Also converged once an accepted step lowers the cost by less than
    /// this fraction (parameters near zero never meet `relative_step`).
    pub relative_cost: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 500,
            relative_step: 1e-8,
            relative_cost: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    pub uncertainties: Vec<f64>,
    pub residual_rms: f64,
    pub iterations: usize,
    pub converged: bool,
    pub rms_history: Vec<f64>,
}

/// Minimize Σ (y − f(x; p))² starting from `p0`.
///
/// `model(p, x, grad)` returns f and writes ∂f/∂p into `grad`.
pub fn levenberg_marquardt<F>(model: &F, x: &[f64], y: &[f64], p0: &[f64], opts: LmOptions) -> Result<LmOutcome>
where
    F: Fn(&[f64], f64, &mut [f64]) -> f64,
{
    let n = x.len();
    let m = p0.len();
    let evaluate = |p: &[f64]| -> (DVector<f64>, DMatrix<f64>) {
        let mut r = DVector::zeros(n);
        let mut j = DMatrix::zeros(n, m);
        let mut grad = vec![0.0; m];
        for i in 0..n {
            r[i] = y[i] - model(p, x[i], &mut grad);
            for k in 0..m {
                j[(i, k)] = grad[k];
            }
        }
        (r, j)
    };
    let cost = |r: &DVector<f64>| r.norm_squared();

    let mut p = p0.to_vec();
    let (mut r, mut j) = evaluate(&p);
    let mut c = cost(&r);
    if !c.is_finite() {
        return Err(Error::Fit("model is not finite at the initial guess".into()));
    }
    let rms = |c: f64| (c / n as f64).sqrt();
    let mut history = vec![rms(c)];
    // Marquardt damping, relative to the diagonal of JᵀJ.
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        let mut accepted = false;
        for _ in 0..60 {
            let mut a = jtj.clone();
            for k in 0..m {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let Some(step) = a.lu().solve(&g) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let (tr, tj) = evaluate(&trial);
            let tc = cost(&tr);
            if tc.is_finite() && tc <= c {
                converged = p
                    .iter()
                    .zip(&trial)
                    .all(|(a, b)| (b - a).abs() <= opts.relative_step * a.abs().max(1e-300))
                    || c - tc <= opts.relative_cost * c;
                p = trial;
                r = tr;
                j = tj;
                c = tc;
                history.push(rms(c));
                lambda = (lambda / 10.0).max(1e-15);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // No damping makes progress: the cost is at a numerical minimum.
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }

    let jtj = j.transpose() * &j;
    let dof = n.saturating_sub(m).max(1) as f64;
    let variance = c / dof;
    let uncertainties = match jtj.clone().try_inverse() {
        Some(inv) if (0..m).all(|k| inv[(k, k)].is_finite() && inv[(k, k)] >= 0.0) => {
            (0..m).map(|k| (variance * inv[(k, k)]).sqrt()).collect()
        }
        _ => vec![f64::INFINITY; m],
    };
    Ok(LmOutcome {
        params: p,
        uncertainties,
        residual_rms: rms(c),
        iterations,
        converged,
        rms_history: history,
    })
}
