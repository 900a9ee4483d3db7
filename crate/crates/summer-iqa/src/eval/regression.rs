//! Five-parameter logistic regression mapping objective scores onto the
//! subjective scale before validation metrics are computed.
//!
//! The fit is Levenberg-Marquardt least squares with an analytic Jacobian,
//! started from the fixed initial vector [0.0, 0.1, 0.0, 0.0, 0.0].

use crate::error::{IqaError, Result};

/// Which logistic term the model uses.
///
/// `Standard` is the usual IQA regression curve,
/// `q = b1*(1/2 - 1/(1 + exp(b2*(q0 - b3)))) + b4*q0 + b5`.
/// `Printed` swaps in `1 - 1/(2 + exp(b2*(q0 - b3)))`, kept selectable for
/// A/B comparison against sources that state the curve that way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogisticForm {
    #[default]
    Standard,
    Printed,
}

pub const INITIAL_BETA: [f64; 5] = [0.0, 0.1, 0.0, 0.0, 0.0];
pub const MAX_ITERATIONS: usize = 5000;
pub const RELATIVE_TOLERANCE: f64 = 1e-10;

/// Fitted regression curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionModel {
    pub beta: [f64; 5],
    pub converged: bool,
    pub residual_rmse: f64,
    pub form: LogisticForm,
}

impl RegressionModel {
    /// Evaluates the fitted curve at one objective score.
    pub fn apply(&self, q0: f64) -> f64 {
        model_value(&self.beta, q0, self.form)
    }

    pub fn apply_many(&self, q0: &[f64]) -> Vec<f64> {
        q0.iter().map(|&x| self.apply(x)).collect()
    }
}

// 1/(1 + e^t) without overflow.
fn inv_one_plus_exp(t: f64) -> f64 {
    if t > 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

// 1/(2 + e^t) without overflow.
fn inv_two_plus_exp(t: f64) -> f64 {
    if t > 0.0 {
        let e = (-t).exp();
        e / (2.0 * e + 1.0)
    } else {
        1.0 / (2.0 + t.exp())
    }
}

fn model_value(beta: &[f64; 5], q0: f64, form: LogisticForm) -> f64 {
    let t = beta[1] * (q0 - beta[2]);
    let term = match form {
        LogisticForm::Standard => 0.5 - inv_one_plus_exp(t),
        LogisticForm::Printed => 1.0 - inv_two_plus_exp(t),
    };
    beta[0] * term + beta[3] * q0 + beta[4]
}

fn model_jacobian_row(beta: &[f64; 5], q0: f64, form: LogisticForm) -> [f64; 5] {
    let t = beta[1] * (q0 - beta[2]);
    let (term, dterm_dt) = match form {
        LogisticForm::Standard => {
            let s = inv_one_plus_exp(t);
            (0.5 - s, s * (1.0 - s))
        }
        LogisticForm::Printed => {
            let p = inv_two_plus_exp(t);
            (1.0 - p, p * (1.0 - 2.0 * p))
        }
    };
    [
        term,
        beta[0] * dterm_dt * (q0 - beta[2]),
        -beta[0] * dterm_dt * beta[1],
        q0,
        1.0,
    ]
}

fn sum_squared_residuals(beta: &[f64; 5], x: &[f64], y: &[f64], form: LogisticForm) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let r = model_value(beta, xi, form) - yi;
            r * r
        })
        .sum()
}

// Dense least squares min ||A x - b|| via Householder QR. `a` is row-major
// m x k with m >= k. Returns None when a pivot column collapses to zero.
fn qr_least_squares(a: &mut [f64], b: &mut [f64], m: usize, k: usize) -> Option<Vec<f64>> {
    for col in 0..k {
        // Householder vector for column col below the diagonal.
        let mut norm = 0.0;
        for row in col..m {
            norm += a[row * k + col] * a[row * k + col];
        }
        let norm = norm.sqrt();
        if norm < 1e-300 {
            return None;
        }
        let alpha = if a[col * k + col] >= 0.0 { -norm } else { norm };
        let mut v = vec![0.0; m - col];
        v[0] = a[col * k + col] - alpha;
        for row in col + 1..m {
            v[row - col] = a[row * k + col];
        }
        let v_norm_sq: f64 = v.iter().map(|x| x * x).sum();
        if v_norm_sq < 1e-300 {
            continue;
        }
        a[col * k + col] = alpha;
        for row in col + 1..m {
            a[row * k + col] = 0.0;
        }
        for j in col + 1..k {
            let mut dot = 0.0;
            for row in col..m {
                dot += v[row - col] * a[row * k + j];
            }
            let scale = 2.0 * dot / v_norm_sq;
            for row in col..m {
                a[row * k + j] -= scale * v[row - col];
            }
        }
        let mut dot = 0.0;
        for row in col..m {
            dot += v[row - col] * b[row];
        }
        let scale = 2.0 * dot / v_norm_sq;
        for row in col..m {
            b[row] -= scale * v[row - col];
        }
    }
    // Back substitution on the triangular top block.
    let mut x = vec![0.0; k];
    for col in (0..k).rev() {
        let mut acc = b[col];
        for j in col + 1..k {
            acc -= a[col * k + j] * x[j];
        }
        let diag = a[col * k + col];
        if diag.abs() < 1e-300 {
            return None;
        }
        x[col] = acc / diag;
    }
    Some(x)
}

// Exact linear least squares for (b1, b4, b5) with (b2, b3) held fixed;
// cleans up the linear subspace the damped steps only approach.
fn polish_linear_terms(
    beta: &[f64; 5],
    x: &[f64],
    y: &[f64],
    form: LogisticForm,
) -> Option<[f64; 5]> {
    let n = x.len();
    let mut a = vec![0.0; n * 3];
    let mut rhs = y.to_vec();
    for (i, &xi) in x.iter().enumerate() {
        let t = beta[1] * (xi - beta[2]);
        let term = match form {
            LogisticForm::Standard => 0.5 - inv_one_plus_exp(t),
            LogisticForm::Printed => 1.0 - inv_two_plus_exp(t),
        };
        a[i * 3] = term;
        a[i * 3 + 1] = xi;
        a[i * 3 + 2] = 1.0;
    }
    let solution = qr_least_squares(&mut a, &mut rhs, n, 3)?;
    Some([solution[0], beta[1], beta[2], solution[1], solution[2]])
}

/// Least-squares fit of the logistic curve, standard form.
pub fn fit_regression(objective: &[f64], subjective: &[f64]) -> Result<RegressionModel> {
    fit_regression_with_form(objective, subjective, LogisticForm::Standard)
}

/// Least-squares fit with an explicit logistic form.
pub fn fit_regression_with_form(
    objective: &[f64],
    subjective: &[f64],
    form: LogisticForm,
) -> Result<RegressionModel> {
    if objective.len() != subjective.len() {
        return Err(IqaError::Parameter(format!(
            "length mismatch: {} vs {}",
            objective.len(),
            subjective.len()
        )));
    }
    if objective.len() < 6 {
        return Err(IqaError::Parameter(format!(
            "need at least 6 points to fit 5 parameters, got {}",
            objective.len()
        )));
    }
    if !objective.iter().chain(subjective).all(|v| v.is_finite()) {
        return Err(IqaError::Parameter("non-finite input scores".into()));
    }

    let n = objective.len();
    let mut beta = INITIAL_BETA;
    let mut sse = sum_squared_residuals(&beta, objective, subjective, form);
    let mut lambda: f64 = 1e-3;
    let mut converged = false;

    for _ in 0..MAX_ITERATIONS {
        // One damped step: minimize ||J d + r||^2 + lambda ||D d||^2 via QR
        // on the augmented system [J; sqrt(lambda) D], D = column norms.
        let mut jacobian = vec![0.0; n * 5];
        let mut residuals = vec![0.0; n];
        let mut column_scale = [0.0f64; 5];
        for i in 0..n {
            let row = model_jacobian_row(&beta, objective[i], form);
            for (j, &v) in row.iter().enumerate() {
                jacobian[i * 5 + j] = v;
                column_scale[j] += v * v;
            }
            residuals[i] = subjective[i] - model_value(&beta, objective[i], form);
        }
        for s in &mut column_scale {
            // Floor keeps zero columns (e.g. b1 = 0 at the start) movable.
            *s = s.sqrt().max(1e-6);
        }

        let mut stepped = false;
        while lambda < 1e15 {
            let rows = n + 5;
            let mut a = vec![0.0; rows * 5];
            let mut b = vec![0.0; rows];
            a[..n * 5].copy_from_slice(&jacobian);
            b[..n].copy_from_slice(&residuals);
            let damping = lambda.sqrt();
            for j in 0..5 {
                a[(n + j) * 5 + j] = damping * column_scale[j];
            }
            let Some(delta) = qr_least_squares(&mut a, &mut b, rows, 5) else {
                lambda *= 10.0;
                continue;
            };
            let mut candidate = beta;
            for (c, d) in candidate.iter_mut().zip(&delta) {
                *c += d;
            }
            let candidate_sse = sum_squared_residuals(&candidate, objective, subjective, form);
            if candidate_sse.is_finite() && candidate_sse < sse {
                let relative_drop = (sse - candidate_sse) / sse.max(1e-300);
                beta = candidate;
                sse = candidate_sse;
                lambda = (lambda * 0.1).max(1e-12);
                stepped = true;
                if relative_drop < RELATIVE_TOLERANCE || sse < 1e-30 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if converged || !stepped {
            // A fully rejected sweep means no downhill direction remains.
            converged = converged || !stepped;
            break;
        }
    }

    // The model is linear in (b1, b4, b5); an exact linear solve tightens
    // what the damped steps only approach.
    if let Some(polished) = polish_linear_terms(&beta, objective, subjective, form) {
        let polished_sse = sum_squared_residuals(&polished, objective, subjective, form);
        if polished_sse.is_finite() && polished_sse <= sse {
            beta = polished;
            sse = polished_sse;
        }
    }

    Ok(RegressionModel {
        beta,
        converged,
        residual_rmse: (sse / n as f64).sqrt(),
        form,
    })
}
