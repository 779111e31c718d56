//! Regularized linear regression for feature screening.
//!
//! OLS and ridge have closed forms; LASSO and SCAD are fitted by cyclic
//! coordinate descent with thresholding updates. [`run_selection`] wraps
//! standardization, λ tuning and reporting into the "dataset 1" (ridge,
//! significance-screened) and "dataset 2" (SCAD, nonzero support) feature
//! sets consumed by the forecasting pipeline.

mod descent;
mod linear;
mod path;
mod penalty;
mod report;

pub use descent::{penalized_fit, penalized_objective};
pub use linear::{
    estimator_mse_diagnostic, ols_fit, ols_fit_with, ridge_fit, ridge_fit_with, Intercept, RegressionFit, DEFAULT_ALPHA,
};
pub use path::{
    lambda_grid, lambda_max, run_selection, standardize_columns, tune_lambda, Selection, SelectionOptions,
    RIDGE_DEFAULT_SHRINKAGE,
};
pub use penalty::{
    scad_penalty, scad_penalty_derivative, scad_threshold, soft_threshold, PenaltyKind, PenaltySpec, DEFAULT_SCAD_A,
};
pub use report::{select_features, SelectionReport, SelectionRow};
