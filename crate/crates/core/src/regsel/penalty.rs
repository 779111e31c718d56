use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Conventional SCAD shape parameter.
pub const DEFAULT_SCAD_A: f64 = 3.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    None,
    Ridge,
    Lasso,
    Scad,
}

impl PenaltyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PenaltyKind::None => "none",
            PenaltyKind::Ridge => "ridge",
            PenaltyKind::Lasso => "lasso",
            PenaltyKind::Scad => "scad",
        }
    }

    /// Whether the penalty produces exact zeros.
    pub fn is_sparse(self) -> bool {
        matches!(self, PenaltyKind::Lasso | PenaltyKind::Scad)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    pub lambda: f64,
    #[serde(default = "default_a")]
    pub a: f64,
}

fn default_a() -> f64 {
    DEFAULT_SCAD_A
}

impl PenaltySpec {
    pub fn none() -> Self {
        PenaltySpec {
            kind: PenaltyKind::None,
            lambda: 0.0,
            a: DEFAULT_SCAD_A,
        }
    }

    pub fn ridge(lambda: f64) -> Self {
        PenaltySpec {
            kind: PenaltyKind::Ridge,
            lambda,
            a: DEFAULT_SCAD_A,
        }
    }

    pub fn lasso(lambda: f64) -> Self {
        PenaltySpec {
            kind: PenaltyKind::Lasso,
            lambda,
            a: DEFAULT_SCAD_A,
        }
    }

    pub fn scad(lambda: f64, a: f64) -> Self {
        PenaltySpec {
            kind: PenaltyKind::Scad,
            lambda,
            a,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::Parameter(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if self.kind == PenaltyKind::Scad {
            check_a(self.a)?;
        }
        Ok(())
    }

    /// Penalty value for a single coefficient.
    pub fn value(&self, beta: f64) -> f64 {
        let b = beta.abs();
        match self.kind {
            PenaltyKind::None => 0.0,
            PenaltyKind::Ridge => self.lambda * b * b,
            PenaltyKind::Lasso => self.lambda * b,
            PenaltyKind::Scad => scad_value(b, self.lambda, self.a),
        }
    }
}

fn check_a(a: f64) -> Result<()> {
    if !(a > 2.0) || !a.is_finite() {
        return Err(Error::Parameter(format!("SCAD shape parameter a must be > 2, got {a}")));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Parameter(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    Ok(())
}

/// `sign(z) · max(|z| − λ, 0)`.
pub fn soft_threshold(z: f64, lambda: f64) -> f64 {
    let m = z.abs() - lambda;
    if m > 0.0 {
        m.copysign(z)
    } else {
        0.0
    }
}

fn scad_value(b: f64, lambda: f64, a: f64) -> f64 {
    if b < lambda {
        lambda * b
    } else if b < a * lambda {
        -(b * b - 2.0 * a * lambda * b + lambda * lambda) / (2.0 * (a - 1.0))
    } else {
        (a + 1.0) * lambda * lambda / 2.0
    }
}

/// SCAD penalty `p_λ(|β|)`: linear below λ, quadratic blend on `[λ, aλ)`,
/// constant `(a+1)λ²/2` from `aλ` on.
pub fn scad_penalty(beta_abs: f64, lambda: f64, a: f64) -> Result<f64> {
    check_a(a)?;
    check_lambda(lambda)?;
    if !(beta_abs >= 0.0) {
        return Err(Error::Parameter(format!("|beta| must be >= 0, got {beta_abs}")));
    }
    Ok(scad_value(beta_abs, lambda, a))
}

/// Derivative of [`scad_penalty`] with respect to `|β|`.
pub fn scad_penalty_derivative(beta_abs: f64, lambda: f64, a: f64) -> Result<f64> {
    check_a(a)?;
    check_lambda(lambda)?;
    if !(beta_abs >= 0.0) {
        return Err(Error::Parameter(format!("|beta| must be >= 0, got {beta_abs}")));
    }
    Ok(if beta_abs <= lambda {
        lambda
    } else {
        (a * lambda - beta_abs).max(0.0) / (a - 1.0)
    })
}

/// SCAD thresholding rule: the minimizer of `½(β − z)² + p_λ(|β|)`.
///
/// The first branch is the positive-part soft threshold `sign(z)(|z| − λ)₊`.
/// Read literally as `sign(z)|z − λ|` the rule would jump at `z = 0` and
/// disagree with the middle branch at `|z| = 2λ`.
pub fn scad_threshold(z: f64, lambda: f64, a: f64) -> Result<f64> {
    check_a(a)?;
    check_lambda(lambda)?;
    Ok(scad_threshold_unchecked(z, lambda, a))
}

pub(crate) fn scad_threshold_unchecked(z: f64, lambda: f64, a: f64) -> f64 {
    let az = z.abs();
    if az <= 2.0 * lambda {
        soft_threshold(z, lambda)
    } else if az <= a * lambda {
        ((a - 1.0) * z - (a * lambda).copysign(z)) / (a - 2.0)
    } else {
        z
    }
}

/// Minimizer of `(v/2)(β − z)² + p_λ(|β|)` for a coordinate whose design
/// column has mean square `v`. Reduces to [`scad_threshold`] at `v = 1`.
pub(crate) fn scad_threshold_scaled(z: f64, lambda: f64, a: f64, v: f64) -> f64 {
    if v == 1.0 {
        return scad_threshold_unchecked(z, lambda, a);
    }
    let az = z.abs();
    if v * (a - 1.0) > 1.0 {
        if az <= lambda * (1.0 + 1.0 / v) {
            soft_threshold(z, lambda / v)
        } else if az < a * lambda {
            let mag = (v * az - a * lambda / (a - 1.0)) / (v - 1.0 / (a - 1.0));
            mag.copysign(z)
        } else {
            z
        }
    } else {
        // The univariate problem is non-convex; compare the stationary
        // candidates of each branch directly.
        let obj = |b: f64| 0.5 * v * (b - z).powi(2) + scad_value(b.abs(), lambda, a);
        let lin = (az - lambda / v).clamp(0.0, lambda);
        let mid_den = v - 1.0 / (a - 1.0);
        let mut cands = vec![0.0, lin, lambda, a * lambda, az.max(a * lambda)];
        if mid_den != 0.0 {
            let m = (v * az - a * lambda / (a - 1.0)) / mid_den;
            cands.push(m.clamp(lambda, a * lambda));
        }
        cands
            .into_iter()
            .map(|b| b.copysign(z))
            .min_by(|x, y| obj(*x).total_cmp(&obj(*y)))
            .unwrap_or(0.0)
    }
}
