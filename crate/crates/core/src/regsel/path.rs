use serde::{Deserialize, Serialize};

use super::descent::penalized_fit;
use super::linear::{ridge_fit, RegressionFit};
use super::penalty::{PenaltyKind, PenaltySpec, DEFAULT_SCAD_A};
use super::report::{select_features, SelectionReport};
use crate::error::{Error, Result};
use crate::numcore::{xt_vec, Tensor};

/// Options for a full selection run: standardize, pick λ, fit, report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionOptions {
    /// Fixed λ. `None` tunes λ on a chronological hold-out for the sparse
    /// penalties and uses [`RIDGE_DEFAULT_SHRINKAGE`] for ridge.
    pub lambda: Option<f64>,
    pub a: f64,
    pub alpha: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub grid_points: usize,
    /// Smallest grid λ as a fraction of the largest.
    pub grid_ratio: f64,
    /// Trailing share of rows held out for λ scoring.
    pub holdout_fraction: f64,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        SelectionOptions {
            lambda: None,
            a: DEFAULT_SCAD_A,
            alpha: 0.05,
            tol: 1e-7,
            max_iter: 10_000,
            grid_points: 20,
            grid_ratio: 1e-3,
            holdout_fraction: 0.1,
        }
    }
}

impl SelectionOptions {
    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.lambda {
            if !(l >= 0.0) || !l.is_finite() {
                return Err(Error::Config(format!("lambda must be finite and >= 0, got {l}")));
            }
        }
        if !(self.a > 2.0) {
            return Err(Error::Config(format!("SCAD a must be > 2, got {}", self.a)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Config("tol must be > 0 and max_iter >= 1".into()));
        }
        if self.grid_points < 2 || !(self.grid_ratio > 0.0 && self.grid_ratio < 1.0) {
            return Err(Error::Config("grid needs >= 2 points and a ratio in (0, 1)".into()));
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return Err(Error::Config(format!(
                "holdout_fraction must lie in (0, 1), got {}",
                self.holdout_fraction
            )));
        }
        Ok(())
    }
}

/// Outcome of [`run_selection`].
#[derive(Debug, Clone)]
pub struct Selection {
    /// Fit on the standardized design.
    pub fit: RegressionFit,
    /// Report with coefficients mapped back to the original feature scale.
    pub report: SelectionReport,
    pub lambda: f64,
    /// `(λ, hold-out MSE)` for every grid point when λ was tuned.
    pub lambda_scores: Vec<(f64, f64)>,
}

/// Column-standardized copy of `x` (population moments) plus the moments.
pub fn standardize_columns(x: &Tensor, names: &[String]) -> Result<(Tensor, Vec<f64>, Vec<f64>)> {
    let (n, m) = x.dims2()?;
    if names.len() != m {
        return Err(Error::Shape(format!("{} names for {m} columns", names.len())));
    }
    if n < 2 {
        return Err(Error::InsufficientData(format!("{n} rows cannot be standardized")));
    }
    let mut means = vec![0.0; m];
    let mut sds = vec![0.0; m];
    for j in 0..m {
        let col = x.column(j);
        let mu = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n as f64;
        if !(var.sqrt() > 1e-12 * mu.abs().max(1.0)) {
            return Err(Error::ConstantColumn {
                column: names[j].clone(),
            });
        }
        means[j] = mu;
        sds[j] = var.sqrt();
    }
    let mut data = Vec::with_capacity(n * m);
    for r in 0..n {
        data.extend(x.row(r).iter().enumerate().map(|(j, v)| (v - means[j]) / sds[j]));
    }
    Ok((Tensor::matrix(n, m, data)?, means, sds))
}

/// `max |Xᵀy| / n` for centered `y`: the smallest λ at which the lasso on a
/// standardized design is entirely zero.
pub fn lambda_max(x_std: &Tensor, y: &[f64]) -> Result<f64> {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let yc: Vec<f64> = y.iter().map(|v| v - mean).collect();
    Ok(xt_vec(x_std, &yc)?.iter().fold(0.0f64, |m, v| m.max(v.abs())) / n)
}

/// Descending log-spaced grid from `max` to `max · ratio`.
pub fn lambda_grid(max: f64, points: usize, ratio: f64) -> Vec<f64> {
    if points == 1 {
        return vec![max];
    }
    let (hi, lo) = (max.ln(), (max * ratio).ln());
    (0..points)
        .map(|i| (hi + (lo - hi) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

fn fit_with(kind: PenaltyKind, x: &Tensor, y: &[f64], lambda: f64, opts: &SelectionOptions) -> Result<RegressionFit> {
    match kind {
        PenaltyKind::Ridge => ridge_fit(x, y, lambda),
        PenaltyKind::Lasso => penalized_fit(x, y, PenaltySpec::lasso(lambda), opts.tol, opts.max_iter),
        PenaltyKind::Scad => penalized_fit(x, y, PenaltySpec::scad(lambda, opts.a), opts.tol, opts.max_iter),
        PenaltyKind::None => super::linear::ols_fit(x, y),
    }
}

/// Ridge λ used when none is given, per row of the standardized design.
///
/// Ridge's λ enters as `XᵀX + λI`, whose diagonal is `n` after
/// standardization, so `λ = 10n` is a tenfold shrinkage in correlation units.
/// At that strength the sandwich t-tests screen on the shared (cluster-level)
/// signal rather than on partial effects.
pub const RIDGE_DEFAULT_SHRINKAGE: f64 = 10.0;

/// `[ratio·λmax, λmax]` for the sparse penalties on a standardized design.
fn sparse_grid(x_std: &Tensor, y: &[f64], opts: &SelectionOptions) -> Result<Vec<f64>> {
    let top = lambda_max(x_std, y)?;
    if !(top > 0.0) {
        return Err(Error::InsufficientData(
            "response has no variation to regress on".into(),
        ));
    }
    Ok(lambda_grid(top, opts.grid_points, opts.grid_ratio))
}

/// Scores each grid λ by MSE on the trailing `holdout_fraction` of rows,
/// fitting on the leading rows. Returns the best λ (ties go to the larger λ).
pub fn tune_lambda(
    kind: PenaltyKind,
    x_std: &Tensor,
    y: &[f64],
    grid: &[f64],
    opts: &SelectionOptions,
) -> Result<(f64, Vec<(f64, f64)>)> {
    let (n, m) = x_std.dims2()?;
    let n_val = ((n as f64 * opts.holdout_fraction).ceil() as usize).max(1);
    if n_val >= n || n - n_val < 2 {
        return Err(Error::InsufficientData(format!(
            "{n} rows leave no room for a {n_val}-row hold-out"
        )));
    }
    let n_fit = n - n_val;
    let x_fit = Tensor::matrix(n_fit, m, x_std.data()[..n_fit * m].to_vec())?;
    let x_val = Tensor::matrix(n_val, m, x_std.data()[n_fit * m..].to_vec())?;
    let (y_fit, y_val) = y.split_at(n_fit);
    let mut scores = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, f64)> = None;
    for &lambda in grid {
        let fit = fit_with(kind, &x_fit, y_fit, lambda, opts)?;
        let pred = fit.predict(&x_val)?;
        let mse = pred.iter().zip(y_val).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / n_val as f64;
        scores.push((lambda, mse));
        if best.is_none_or(|(_, b)| mse < b) {
            best = Some((lambda, mse));
        }
    }
    let (lambda, _) = best.ok_or_else(|| Error::Config("empty lambda grid".into()))?;
    Ok((lambda, scores))
}

/// Standardizes `x`, picks λ (fixed or tuned), fits the penalty and reports
/// per-feature selection. Rows must be in chronological order.
pub fn run_selection(
    x: &Tensor,
    y: &[f64],
    names: &[String],
    kind: PenaltyKind,
    opts: &SelectionOptions,
) -> Result<Selection> {
    opts.validate()?;
    let (x_std, _, sds) = standardize_columns(x, names)?;
    let (lambda, lambda_scores) = match (kind, opts.lambda) {
        (PenaltyKind::None, _) => (0.0, Vec::new()),
        (_, Some(l)) => (l, Vec::new()),
        (PenaltyKind::Ridge, None) => (RIDGE_DEFAULT_SHRINKAGE * x_std.rows() as f64, Vec::new()),
        (kind, None) => {
            let grid = sparse_grid(&x_std, y, opts)?;
            tune_lambda(kind, &x_std, y, &grid, opts)?
        }
    };
    let fit = fit_with(kind, &x_std, y, lambda, opts)?;
    if !fit.converged {
        log::warn!(
            "{} fit did not converge in {} iterations",
            kind.as_str(),
            fit.iterations
        );
    }
    let mut report = select_features(&fit, names, opts.alpha)?;
    for (row, sd) in report.rows.iter_mut().zip(&sds) {
        row.coef /= sd;
    }
    report.dataset = match kind {
        PenaltyKind::Ridge => "dataset 1 (RR)".into(),
        PenaltyKind::Scad => "dataset 2 (SCAD)".into(),
        PenaltyKind::Lasso => "lasso".into(),
        PenaltyKind::None => "ols".into(),
    };
    Ok(Selection {
        fit,
        report,
        lambda,
        lambda_scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::Rng;

    fn panel(seed: u64, n: usize, m: usize) -> (Tensor, Vec<f64>, Vec<String>) {
        let mut rng = Rng::new(seed);
        let x = Tensor::matrix(n, m, (0..n * m).map(|_| 3.0 + 2.0 * rng.standard_normal()).collect()).unwrap();
        let y = (0..n)
            .map(|r| 1.0 + 2.0 * x.get(r, 0) - 1.5 * x.get(r, 3) + rng.standard_normal())
            .collect();
        (x, y, (0..m).map(|j| format!("f{j}")).collect())
    }

    #[test]
    fn grid_is_log_spaced_and_descending() {
        let g = lambda_grid(10.0, 20, 1e-3);
        assert_eq!(g.len(), 20);
        assert!((g[0] - 10.0).abs() < 1e-12 && (g[19] - 0.01).abs() < 1e-12);
        let r = g[1] / g[0];
        for w in g.windows(2) {
            assert!((w[1] / w[0] - r).abs() < 1e-12);
        }
    }

    #[test]
    fn standardization_rejects_constant_column() {
        let x = Tensor::from_rows(&[[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]]).unwrap();
        let names = vec!["a".to_string(), "flat".to_string()];
        match standardize_columns(&x, &names) {
            Err(Error::ConstantColumn { column }) => assert_eq!(column, "flat"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn scad_recovers_planted_support() {
        let (x, y, names) = panel(1, 300, 10);
        let sel = run_selection(&x, &y, &names, PenaltyKind::Scad, &SelectionOptions::default()).unwrap();
        let chosen = sel.report.selected_indices();
        assert!(chosen.contains(&0) && chosen.contains(&3), "{chosen:?}");
        // original-scale coefficients come back near the generating ones
        assert!((sel.report.rows[0].coef - 2.0).abs() < 0.1);
        assert!((sel.report.rows[3].coef + 1.5).abs() < 0.1);
        assert_eq!(sel.lambda_scores.len(), 20);
    }

    #[test]
    fn fixed_huge_lambda_selects_nothing() {
        let (x, y, names) = panel(2, 100, 5);
        let opts = SelectionOptions {
            lambda: Some(1e9),
            ..Default::default()
        };
        let sel = run_selection(&x, &y, &names, PenaltyKind::Scad, &opts).unwrap();
        assert_eq!(sel.report.selected_count(), 0);
    }

    #[test]
    fn ridge_report_covers_all_features() {
        let (x, y, names) = panel(3, 200, 6);
        let sel = run_selection(&x, &y, &names, PenaltyKind::Ridge, &SelectionOptions::default()).unwrap();
        assert_eq!(sel.report.rows.len(), 6);
        assert!(sel.report.approximate);
        assert!(sel.report.rows.iter().all(|r| r.p.is_some()));
        let chosen = sel.report.selected_indices();
        assert!(chosen.contains(&0) && chosen.contains(&3));
    }
}
