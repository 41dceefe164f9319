//! Least-squares fitting: closed-form straight lines and a compact
//! Levenberg–Marquardt solver with a finite-difference Jacobian.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
}

/// Ordinary least-squares straight line `y = slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "x has {} points but y has {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::FitFailure("a line needs at least two points".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let scale = x.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    if sxx <= 1e-24 * scale * scale * nf {
        return Err(Error::FitFailure("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (slope_stderr, intercept_stderr) = if n > 2 {
        let ssr: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (b - slope * a - intercept).powi(2))
            .sum();
        let s2 = ssr / (nf - 2.0);
        let se_slope = (s2 / sxx).sqrt();
        let se_int = (s2 * (1.0 / nf + mx * mx / sxx)).sqrt();
        (se_slope, se_int)
    } else {
        (0.0, 0.0)
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr,
        intercept_stderr,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Relative change in cost that counts as converged.
    pub cost_tol: f64,
    pub param_tol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            cost_tol: 1e-15,
            param_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmResult {
    pub params: Vec<f64>,
    /// Sum of squared residuals.
    pub cost: f64,
    /// Standard errors from `s²·(JᵀJ)⁻¹` with `s² = cost/(m − n)`.
    pub stderr: Vec<f64>,
    pub iterations: usize,
}

/// Minimises `Σ rᵢ(p)²` where `residuals(p, out)` fills `out` (length `m`).
pub fn levenberg_marquardt<F>(
    residuals: F,
    p0: &[f64],
    m: usize,
    opts: &LmOptions,
) -> Result<LmResult>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = p0.len();
    if m < n {
        return Err(Error::FitFailure(format!(
            "{m} residuals cannot determine {n} parameters"
        )));
    }
    let mut p = p0.to_vec();
    let mut r = vec![0.0; m];
    let mut r_trial = vec![0.0; m];
    residuals(&p, &mut r);
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    if !cost.is_finite() {
        return Err(Error::FitFailure(
            "non-finite residuals at the starting point".into(),
        ));
    }
    let mut lambda = 1e-3;
    let mut jac = DMatrix::<f64>::zeros(m, n);
    let mut iterations = 0;
    let mut converged = false;

    let jacobian = |p: &[f64], r: &[f64], jac: &mut DMatrix<f64>| {
        let mut pp = p.to_vec();
        let mut rr = vec![0.0; m];
        for j in 0..n {
            let h = 1e-7 * p[j].abs().max(1e-7);
            pp[j] = p[j] + h;
            residuals(&pp, &mut rr);
            for i in 0..m {
                jac[(i, j)] = (rr[i] - r[i]) / h;
            }
            pp[j] = p[j];
        }
    };

    while iterations < opts.max_iter {
        iterations += 1;
        jacobian(&p, &r, &mut jac);
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&r);

        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(delta) = a.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            residuals(&trial, &mut r_trial);
            let c: f64 = r_trial.iter().map(|v| v * v).sum();
            if c.is_finite() && c <= cost {
                let rel = (cost - c) / cost.max(f64::MIN_POSITIVE);
                let step = delta
                    .iter()
                    .zip(&p)
                    .map(|(d, v)| d.abs() / v.abs().max(1e-30))
                    .fold(0.0, f64::max);
                p = trial;
                std::mem::swap(&mut r, &mut r_trial);
                cost = c;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if rel < opts.cost_tol || step < opts.param_tol || cost == 0.0 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // No downhill step at any damping: we are at a minimum to
            // working precision.
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(Error::FitFailure(format!(
            "Levenberg-Marquardt did not converge in {} iterations",
            opts.max_iter
        )));
    }

    jacobian(&p, &r, &mut jac);
    let jtj = jac.transpose() * &jac;
    let dof = (m - n).max(1) as f64;
    let s2 = cost / dof;
    let stderr = match jtj.try_inverse() {
        Some(inv) => (0..n).map(|k| (inv[(k, k)] * s2).max(0.0).sqrt()).collect(),
        None => vec![f64::NAN; n],
    };
    Ok(LmResult {
        params: p,
        cost,
        stderr,
        iterations,
    })
}
