use nalgebra::{DMatrix, DVector};

use super::DataSeries;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsqOptions {
    pub max_iterations: usize,
    /// Tolerance on the scaled gradient that decides `converged`.
    pub gtol: f64,
    /// Relative step size below which iteration stops.
    pub xtol: f64,
    /// Reciprocal condition number below which the Jacobian counts as rank deficient.
    pub rcond: f64,
}

impl Default for LsqOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gtol: 1e-6,
            xtol: 1e-13,
            rcond: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub names: Vec<String>,
    pub params: Vec<f64>,
    /// Euclidean norm of the weighted residual vector.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// One standard deviation from the local curvature of the cost.
    pub uncertainties: Vec<f64>,
    /// max_j |J_jᵀ r| / (|J_j| |r|), with |r| floored at 1e-6 of the weighted data norm.
    pub gradient_norm: f64,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.params[i])
    }

    pub fn uncertainty(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.uncertainties[i])
    }

    /// `name = value` lines followed by the diagnostics.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        for ((n, p), u) in self.names.iter().zip(&self.params).zip(&self.uncertainties) {
            out.push_str(&format!("{n} = {p:e}\n{n}_uncertainty = {u:e}\n"));
        }
        out.push_str(&format!(
            "residual_norm = {:e}\niterations = {}\nconverged = {}\ngradient_norm = {:e}\n",
            self.residual_norm, self.iterations, self.converged, self.gradient_norm
        ));
        out
    }
}

struct Problem<'a, F> {
    model: F,
    data: &'a DataSeries,
    weights: Vec<f64>,
}

impl<F: Fn(f64, &[f64]) -> f64> Problem<'_, F> {
    fn residuals(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.data.len(),
            self.data
                .t()
                .iter()
                .zip(self.data.y())
                .zip(&self.weights)
                .map(|((&t, &y), w)| ((self.model)(t, p) - y) * w),
        )
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let m = self.data.len();
        let mut jac = DMatrix::zeros(m, p.len());
        let mut q = p.to_vec();
        for j in 0..p.len() {
            let h = (1e-6 * p[j].abs()).max(1e-8);
            q[j] = p[j] + h;
            let rp = self.residuals(&q);
            q[j] = p[j] - h;
            let rm = self.residuals(&q);
            q[j] = p[j];
            jac.set_column(j, &((rp - rm) / (2.0 * h)));
        }
        jac
    }
}

fn scaled_gradient(jac: &DMatrix<f64>, r: &DVector<f64>, floor: f64) -> f64 {
    let rn = r.norm().max(floor);
    let g = jac.transpose() * r;
    (0..jac.ncols())
        .map(|j| {
            let cn = jac.column(j).norm();
            if cn == 0.0 {
                0.0
            } else {
                g[j].abs() / (cn * rn)
            }
        })
        .fold(0.0, f64::max)
}

fn is_rank_deficient(jac: &DMatrix<f64>, rcond: f64) -> bool {
    let mut scaled = jac.clone();
    for mut col in scaled.column_iter_mut() {
        let n = col.norm();
        if n == 0.0 {
            return true;
        }
        col /= n;
    }
    let sv = scaled.singular_values();
    let max = sv.max();
    let min = sv.min();
    // NaN singular values count as deficient
    min.is_nan() || min <= rcond * max
}

/// Levenberg-Marquardt minimization of Σ((y_i - model(t_i; p))/σ_i)².
///
/// The Jacobian is taken by central differences with step max(1e-8, 1e-6|p_j|).
pub fn least_squares<F>(
    model: F,
    data: &DataSeries,
    init: &[f64],
    names: &[&str],
    opts: &LsqOptions,
) -> Result<FitResult>
where
    F: Fn(f64, &[f64]) -> f64,
{
    if init.is_empty() || init.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "initial parameters",
            reason: "must be a non-empty finite vector".into(),
        });
    }
    if names.len() != init.len() {
        return Err(Error::InvalidParameter {
            name: "parameter names",
            reason: format!("{} names for {} parameters", names.len(), init.len()),
        });
    }
    let weights: Vec<f64> = match data.sigma() {
        Some(s) => s.iter().map(|v| 1.0 / v).collect(),
        None => vec![1.0; data.len()],
    };
    let data_norm = data
        .y()
        .iter()
        .zip(&weights)
        .map(|(y, w)| (y * w).powi(2))
        .sum::<f64>()
        .sqrt();
    let floor = 1e-6 * data_norm.max(f64::MIN_POSITIVE);
    let prob = Problem {
        model,
        data,
        weights,
    };

    let n = init.len();
    let mut p = DVector::from_column_slice(init);
    let mut r = prob.residuals(p.as_slice());
    let mut cost = 0.5 * r.norm_squared();
    if !cost.is_finite() {
        return Err(Error::FitFailure(
            "model is not finite at the initial parameters".into(),
        ));
    }
    let mut lambda = 1e-4;
    let mut iterations = 0;
    let mut finished = false;
    while iterations < opts.max_iterations {
        let jac = prob.jacobian(p.as_slice());
        if scaled_gradient(&jac, &r, floor) <= 1e-6 * opts.gtol {
            finished = true;
            break;
        }
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        let dmax = jtj.diagonal().max();
        let mut accepted = None;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-12 * dmax).max(f64::MIN_POSITIVE);
            }
            if let Some(chol) = a.cholesky() {
                let step = -chol.solve(&g);
                let trial = &p + &step;
                let r_trial = prob.residuals(trial.as_slice());
                let c_trial = 0.5 * r_trial.norm_squared();
                // change in cost without cancellation against the full sum
                let change = 0.5 * (&r_trial - &r).dot(&(&r_trial + &r));
                if c_trial.is_finite() && change < 0.0 {
                    accepted = Some((step, trial, r_trial, c_trial));
                    lambda = (lambda / 10.0).max(1e-15);
                    break;
                }
            }
            lambda *= 10.0;
        }
        let Some((step, trial, r_trial, c_trial)) = accepted else {
            finished = true;
            break;
        };
        let small_step = step.norm() <= opts.xtol * (p.norm() + opts.xtol);
        p = trial;
        r = r_trial;
        cost = c_trial;
        if small_step {
            finished = true;
            break;
        }
    }
    if !finished {
        return Err(Error::NonConvergence { iterations });
    }

    let jac = prob.jacobian(p.as_slice());
    if is_rank_deficient(&jac, opts.rcond) {
        return Err(Error::SingularJacobian);
    }
    let gradient_norm = scaled_gradient(&jac, &r, floor);
    let dof = data.len().saturating_sub(n);
    let variance_scale = if data.sigma().is_some() || dof == 0 {
        1.0
    } else {
        2.0 * cost / dof as f64
    };
    let uncertainties = match (jac.transpose() * &jac).try_inverse() {
        Some(cov) => (0..n)
            .map(|i| (cov[(i, i)] * variance_scale).max(0.0).sqrt())
            .collect(),
        None => vec![f64::INFINITY; n],
    };
    Ok(FitResult {
        names: names.iter().map(|s| s.to_string()).collect(),
        params: p.iter().copied().collect(),
        residual_norm: r.norm(),
        iterations,
        converged: gradient_norm <= opts.gtol,
        uncertainties,
        gradient_norm,
    })
}
