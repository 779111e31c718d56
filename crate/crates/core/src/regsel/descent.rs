use super::linear::{center, Intercept, RegressionFit};
use super::penalty::{scad_threshold_scaled, soft_threshold, PenaltyKind, PenaltySpec};
use crate::error::{Error, Result};
use crate::numcore::{gram, sym_eigenvalues, Tensor};

/// Sparse penalized least squares by cyclic coordinate descent.
///
/// Minimizes `(1/2n)‖y − Xβ‖² + Σⱼ p_λ(|βⱼ|)` with an unpenalized intercept.
/// Each coordinate step solves the univariate least-squares problem on the
/// partial residual and applies the soft threshold (lasso) or the SCAD
/// threshold. With standardized columns (`xⱼᵀxⱼ/n = 1`) the step is exactly
/// `threshold(xⱼᵀrⱼ/n, λ)`.
///
/// SCAD fits warm-start from the lasso solution at the same λ. Hitting
/// `max_iter` is not an error; the fit comes back with `converged = false`.
pub fn penalized_fit(x: &Tensor, y: &[f64], penalty: PenaltySpec, tol: f64, max_iter: usize) -> Result<RegressionFit> {
    penalty.validate()?;
    if !penalty.kind.is_sparse() {
        return Err(Error::Parameter(format!(
            "penalized_fit handles lasso and scad, got {}",
            penalty.kind.as_str()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be > 0, got {tol}")));
    }
    let c = center(x, y, Intercept::Fit)?;
    let (n, m) = c.x.dims2()?;
    let mut solver = Descent::new(&c.x, &c.y);

    let mut iterations = 0;
    let mut trace = Vec::new();
    let lasso = PenaltySpec::lasso(penalty.lambda);
    let (mut converged, it) = solver.run(&lasso, tol, max_iter, &mut trace);
    iterations += it;
    if penalty.kind == PenaltyKind::Scad {
        trace.clear();
        let (c2, it2) = solver.run(&penalty, tol, max_iter.saturating_sub(iterations).max(1), &mut trace);
        converged = c2;
        iterations += it2;
    }

    let beta = solver.beta;
    let rss: f64 = solver.resid.iter().map(|r| r * r).sum();
    let nnz = beta.iter().filter(|b| **b != 0.0).count();
    let dof = n.saturating_sub(nnz + 1).max(1);
    let beta0 = c.y_mean - c.x_mean.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>();
    let support = beta
        .iter()
        .enumerate()
        .filter(|(_, b)| **b != 0.0)
        .map(|(j, _)| j)
        .collect();
    let gram_eigenvalues = if m > 0 {
        sym_eigenvalues(&gram(&c.x)?)?
    } else {
        Vec::new()
    };
    Ok(RegressionFit {
        beta,
        beta0,
        penalty,
        sigma2_hat: rss / dof as f64,
        gram_eigenvalues,
        support,
        converged,
        iterations,
        std_errors: None,
        dof,
        objective_trace: trace,
    })
}

/// Objective `(1/2n)‖y − Xβ‖² + Σ p_λ(|βⱼ|)` on already-centered data.
pub fn penalized_objective(x: &Tensor, y: &[f64], beta: &[f64], penalty: &PenaltySpec) -> Result<f64> {
    let n = y.len() as f64;
    let fitted = crate::numcore::mat_vec(x, beta)?;
    let rss: f64 = y.iter().zip(&fitted).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(rss / (2.0 * n) + beta.iter().map(|b| penalty.value(*b)).sum::<f64>())
}

struct Descent {
    n: usize,
    m: usize,
    /// Column mean squares `xⱼᵀxⱼ / n`.
    scale: Vec<f64>,
    beta: Vec<f64>,
    resid: Vec<f64>,
    columns: Vec<Vec<f64>>,
}

impl Descent {
    fn new(x: &Tensor, y: &[f64]) -> Self {
        let (n, m) = (x.rows(), x.cols());
        let columns: Vec<Vec<f64>> = (0..m).map(|j| x.column(j)).collect();
        let scale = columns
            .iter()
            .map(|c| c.iter().map(|v| v * v).sum::<f64>() / n as f64)
            .collect();
        Descent {
            n,
            m,
            scale,
            beta: vec![0.0; m],
            resid: y.to_vec(),
            columns,
        }
    }

    fn objective(&self, penalty: &PenaltySpec) -> f64 {
        let rss: f64 = self.resid.iter().map(|r| r * r).sum();
        rss / (2.0 * self.n as f64) + self.beta.iter().map(|b| penalty.value(*b)).sum::<f64>()
    }

    fn update(&self, z: f64, v: f64, penalty: &PenaltySpec) -> f64 {
        match penalty.kind {
            PenaltyKind::Lasso => soft_threshold(z, penalty.lambda / v),
            PenaltyKind::Scad => scad_threshold_scaled(z, penalty.lambda, penalty.a, v),
            _ => z,
        }
    }

    fn run(&mut self, penalty: &PenaltySpec, tol: f64, max_iter: usize, trace: &mut Vec<f64>) -> (bool, usize) {
        let nf = self.n as f64;
        let mut prev = self.objective(penalty);
        for sweep in 1..=max_iter {
            let mut max_change = 0.0f64;
            for j in 0..self.m {
                let v = self.scale[j];
                if v == 0.0 {
                    continue;
                }
                let col = &self.columns[j];
                let old = self.beta[j];
                let xr: f64 = col.iter().zip(&self.resid).map(|(a, b)| a * b).sum();
                let z = xr / (nf * v) + old;
                let new = self.update(z, v, penalty);
                let delta = new - old;
                if delta != 0.0 {
                    for (r, xv) in self.resid.iter_mut().zip(col) {
                        *r -= xv * delta;
                    }
                    self.beta[j] = new;
                }
                max_change = max_change.max(delta.abs());
            }
            let obj = self.objective(penalty);
            trace.push(obj);
            if obj > prev + 1e-12 * prev.abs().max(1.0) {
                if penalty.kind == PenaltyKind::Scad {
                    log::warn!("SCAD objective increased on sweep {sweep}: {prev} -> {obj}");
                } else {
                    log::warn!("lasso objective increased on sweep {sweep}: {prev} -> {obj}");
                }
            }
            prev = obj;
            if max_change < tol {
                return (true, sweep);
            }
        }
        (false, max_iter)
    }
}
