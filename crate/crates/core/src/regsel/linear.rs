use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::penalty::{PenaltyKind, PenaltySpec};
use crate::error::{Error, Result};
use crate::numcore::{gram, inverse_spd, mat_vec, matmul, solve_spd, sym_eigenvalues, xt_vec, Tensor};

/// Significance level used to fill [`RegressionFit::support`] for ridge and
/// unpenalized fits.
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Whether a fit estimates an unpenalized intercept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Intercept {
    /// Center X and y, then recover `beta0 = ȳ − x̄ᵀβ`.
    Fit,
    /// Regress through the origin.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub beta: Vec<f64>,
    pub beta0: f64,
    pub penalty: PenaltySpec,
    pub sigma2_hat: f64,
    /// Eigenvalues of the (centered) Gram matrix XᵀX, descending.
    pub gram_eigenvalues: Vec<f64>,
    pub support: Vec<usize>,
    pub converged: bool,
    pub iterations: usize,
    /// Coefficient standard errors (ridge sandwich form; OLS when λ = 0).
    /// Absent for sparse penalties.
    pub std_errors: Option<Vec<f64>>,
    /// Residual degrees of freedom used for t-tests.
    pub dof: usize,
    /// Objective value after each full coordinate-descent sweep.
    #[serde(default)]
    pub objective_trace: Vec<f64>,
}

impl RegressionFit {
    pub fn t_statistics(&self) -> Option<Vec<f64>> {
        let se = self.std_errors.as_ref()?;
        Some(
            self.beta
                .iter()
                .zip(se)
                .map(|(b, s)| if *s > 0.0 { b / s } else { f64::INFINITY.copysign(*b) })
                .collect(),
        )
    }

    /// Two-sided p-values of the approximate t-tests.
    pub fn p_values(&self) -> Option<Vec<f64>> {
        let t = self.t_statistics()?;
        let dist = StudentsT::new(0.0, 1.0, self.dof.max(1) as f64).ok()?;
        Some(
            t.iter()
                .map(|t| {
                    if t.is_finite() {
                        (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
                    } else if t.is_nan() {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect(),
        )
    }

    pub fn predict(&self, x: &Tensor) -> Result<Vec<f64>> {
        Ok(mat_vec(x, &self.beta)?.into_iter().map(|v| v + self.beta0).collect())
    }
}

pub(crate) struct Centered {
    pub x: Tensor,
    pub y: Vec<f64>,
    pub x_mean: Vec<f64>,
    pub y_mean: f64,
}

pub(crate) fn center(x: &Tensor, y: &[f64], intercept: Intercept) -> Result<Centered> {
    let (n, m) = x.dims2()?;
    if y.len() != n {
        return Err(Error::Shape(format!(
            "design has {n} rows but response has {} values",
            y.len()
        )));
    }
    if n == 0 {
        return Err(Error::InsufficientData("empty design matrix".into()));
    }
    if intercept == Intercept::None {
        return Ok(Centered {
            x: Tensor::matrix(n, m, x.data().to_vec())?,
            y: y.to_vec(),
            x_mean: vec![0.0; m],
            y_mean: 0.0,
        });
    }
    let mut x_mean = vec![0.0; m];
    for r in 0..n {
        for (acc, v) in x_mean.iter_mut().zip(x.row(r)) {
            *acc += v;
        }
    }
    x_mean.iter_mut().for_each(|v| *v /= n as f64);
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let mut data = Vec::with_capacity(n * m);
    for r in 0..n {
        data.extend(x.row(r).iter().zip(&x_mean).map(|(v, mu)| v - mu));
    }
    Ok(Centered {
        x: Tensor::matrix(n, m, data)?,
        y: y.iter().map(|v| v - y_mean).collect(),
        x_mean,
        y_mean,
    })
}

/// Ordinary least squares with an intercept.
pub fn ols_fit(x: &Tensor, y: &[f64]) -> Result<RegressionFit> {
    ols_fit_with(x, y, Intercept::Fit)
}

pub fn ols_fit_with(x: &Tensor, y: &[f64], intercept: Intercept) -> Result<RegressionFit> {
    let c = center(x, y, intercept)?;
    let (n, m) = c.x.dims2()?;
    let p = m + usize::from(intercept == Intercept::Fit);
    if n < p {
        return Err(Error::InsufficientData(format!(
            "OLS needs more observations ({n}) than coefficients ({p})"
        )));
    }
    quadratic_fit(&c, PenaltySpec::none(), intercept)
}

/// Ridge regression `β = (XᵀX + λI)⁻¹XᵀY` on centered data; the intercept
/// (mean of y after centering) is never penalized.
pub fn ridge_fit(x: &Tensor, y: &[f64], lambda: f64) -> Result<RegressionFit> {
    ridge_fit_with(x, y, lambda, Intercept::Fit)
}

pub fn ridge_fit_with(x: &Tensor, y: &[f64], lambda: f64, intercept: Intercept) -> Result<RegressionFit> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Parameter(format!(
            "ridge lambda must be > 0 (use ols_fit for lambda = 0), got {lambda}"
        )));
    }
    let c = center(x, y, intercept)?;
    quadratic_fit(&c, PenaltySpec::ridge(lambda), intercept)
}

fn quadratic_fit(c: &Centered, penalty: PenaltySpec, intercept: Intercept) -> Result<RegressionFit> {
    let (n, m) = c.x.dims2()?;
    let lambda = penalty.lambda;
    let g = gram(&c.x)?;
    let eig = sym_eigenvalues(&g)?;
    if penalty.kind == PenaltyKind::None {
        let max = eig.first().copied().unwrap_or(0.0);
        let min = eig.last().copied().unwrap_or(0.0);
        if m > 0 && min <= 1e-10 * max.max(1.0) {
            return Err(Error::Singular(format!(
                "XᵀX is rank deficient (smallest eigenvalue {min:e}); use ridge_fit"
            )));
        }
    }
    let mut a = g.clone();
    for i in 0..m {
        let v = a.get(i, i) + lambda;
        a.set(i, i, v);
    }
    let xty = xt_vec(&c.x, &c.y)?;
    let beta = solve_spd(&a, &Tensor::vector(xty))
        .map_err(|e| match e {
            Error::Singular(msg) => Error::Singular(format!("{msg}; use ridge_fit")),
            e => e,
        })?
        .into_data();

    let fitted = mat_vec(&c.x, &beta)?;
    let rss: f64 = c.y.iter().zip(&fitted).map(|(y, f)| (y - f).powi(2)).sum();
    let used = m + usize::from(intercept == Intercept::Fit);
    let dof = n.saturating_sub(used).max(1);
    let sigma2_hat = rss / dof as f64;

    // Var(β̂) = σ² W XᵀX W with W = (XᵀX + λI)⁻¹; reduces to σ²(XᵀX)⁻¹ at λ = 0.
    let w = inverse_spd(&a)?;
    let cov = matmul(&matmul(&w, &g)?, &w)?;
    let std_errors: Vec<f64> = (0..m).map(|j| (sigma2_hat * cov.get(j, j)).max(0.0).sqrt()).collect();

    let beta0 = c.y_mean - c.x_mean.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>();
    let mut fit = RegressionFit {
        beta,
        beta0,
        penalty,
        sigma2_hat,
        gram_eigenvalues: eig,
        support: Vec::new(),
        converged: true,
        iterations: 1,
        std_errors: Some(std_errors),
        dof,
        objective_trace: Vec::new(),
    };
    let p = fit.p_values().unwrap_or_default();
    fit.support = p
        .iter()
        .enumerate()
        .filter(|(_, p)| **p < DEFAULT_ALPHA)
        .map(|(j, _)| j)
        .collect();
    Ok(fit)
}

/// Estimator mean squared error `σ̂² · Σ 1/λᵢ` over the Gram eigenvalues.
pub fn estimator_mse_diagnostic(fit: &RegressionFit) -> Result<f64> {
    if let Some(&min) = fit.gram_eigenvalues.iter().min_by(|a, b| a.total_cmp(b)) {
        if min <= 1e-12 {
            return Err(Error::IllConditioned { min_eigenvalue: min });
        }
    }
    Ok(fit.sigma2_hat * fit.gram_eigenvalues.iter().map(|l| 1.0 / l).sum::<f64>())
}
