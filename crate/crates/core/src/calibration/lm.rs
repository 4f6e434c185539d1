//! Damped least squares (Levenberg-Marquardt style) with numerical Jacobians
//! by central differences. Accepted iterations strictly decrease the cost.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative step tolerance: stop when |dx_j| < tol * (|x_j| + tol) for all j.
    pub step_tolerance: f64,
    pub initial_lambda: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            step_tolerance: 1e-10,
            initial_lambda: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmResult {
    pub x: Vec<f64>,
    /// Sum of squared residuals at the solution.
    pub cost: f64,
    pub initial_cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Accepted costs, starting from the initial point; strictly decreasing.
    pub cost_history: Vec<f64>,
}

fn cost_of(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn jacobian<F>(f: &F, x: &[f64], n_res: usize) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = x.len();
    let mut jac = DMatrix::zeros(n_res, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let h = 1e-6 * x[j].abs().max(1.0);
        xp[j] = x[j] + h;
        let rp = f(&xp)?;
        xp[j] = x[j] - h;
        let rm = f(&xp)?;
        xp[j] = x[j];
        if rp.len() != n_res || rm.len() != n_res {
            return Err(Error::InvalidParameter(
                "residual length changed during Jacobian evaluation".into(),
            ));
        }
        for i in 0..n_res {
            jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Minimize ||f(x)||^2. `f` returns the residual vector.
pub fn minimize<F>(f: &F, x0: &[f64], opts: &LmOptions) -> Result<LmResult>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut x = x0.to_vec();
    let n = x.len();
    let mut r = f(&x)?;
    let n_res = r.len();
    if n_res < n {
        return Err(Error::RankDeficient(format!(
            "{n_res} residuals cannot determine {n} parameters"
        )));
    }
    let mut cost = cost_of(&r);
    let initial_cost = cost;
    let mut history = vec![cost];
    let mut lambda = opts.initial_lambda;
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..opts.max_iterations {
        iterations = it + 1;
        let jac = jacobian(f, &x, n_res)?;
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * DVector::from_column_slice(&r);

        let mut accepted = false;
        for _ in 0..40 {
            // Marquardt scaling: damp by the diagonal of J^T J
            let mut a = jtj.clone();
            for j in 0..n {
                let d = jtj[(j, j)];
                a[(j, j)] += lambda * if d > 0.0 { d } else { 1.0 };
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&(-&jtr)),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let x_new: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            match f(&x_new) {
                Ok(r_new) if r_new.len() == n_res => {
                    let c_new = cost_of(&r_new);
                    if c_new.is_finite() && c_new < cost {
                        let small_step = step
                            .iter()
                            .zip(x.iter())
                            .all(|(dx, xj)| dx.abs() < opts.step_tolerance * (xj.abs() + opts.step_tolerance));
                        x = x_new;
                        r = r_new;
                        cost = c_new;
                        history.push(cost);
                        lambda = (lambda / 3.0).max(1e-12);
                        accepted = true;
                        if small_step {
                            converged = true;
                        }
                        break;
                    }
                    lambda *= 5.0;
                }
                _ => {
                    lambda *= 5.0;
                }
            }
            if lambda > 1e14 {
                break;
            }
        }
        if !accepted {
            // no descent direction left at any damping: treat as converged
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }

    Ok(LmResult {
        x,
        cost,
        initial_cost,
        iterations,
        converged,
        cost_history: history,
    })
}
