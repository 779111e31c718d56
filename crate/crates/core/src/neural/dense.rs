use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::Rng;

/// `w · x + b` to a single output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub w: Vec<f64>,
    pub b: f64,
}

impl Dense {
    pub fn zeros(input: usize) -> Self {
        Dense {
            w: vec![0.0; input],
            b: 0.0,
        }
    }

    pub fn random(input: usize, rng: &mut Rng) -> Self {
        let bound = 1.0 / (input.max(1) as f64).sqrt();
        Dense {
            w: (0..input).map(|_| rng.uniform(-bound, bound)).collect(),
            b: rng.uniform(-bound, bound),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.w.len() {
            return Err(Error::Shape(format!(
                "dense layer takes {} inputs, got {}",
                self.w.len(),
                x.len()
            )));
        }
        Ok(self.b + self.w.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
    }

    /// `(dw, db, dx)` for upstream gradient `g`.
    pub fn backward(&self, x: &[f64], g: f64) -> Result<(Vec<f64>, f64, Vec<f64>)> {
        if x.len() != self.w.len() {
            return Err(Error::Shape(format!(
                "dense layer takes {} inputs, got {}",
                self.w.len(),
                x.len()
            )));
        }
        Ok((
            x.iter().map(|v| g * v).collect(),
            g,
            self.w.iter().map(|w| g * w).collect(),
        ))
    }
}

/// Mean squared error and its gradient with respect to `pred`.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::Shape(format!(
            "mse needs equal nonzero lengths, got {} and {}",
            pred.len(),
            target.len()
        )));
    }
    let n = pred.len() as f64;
    let loss = pred.iter().zip(target).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / n;
    let grad = pred.iter().zip(target).map(|(p, t)| 2.0 * (p - t) / n).collect();
    Ok((loss, grad))
}
