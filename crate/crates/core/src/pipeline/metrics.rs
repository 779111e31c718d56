use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub mae: f64,
    /// Mean absolute percentage error as a fraction (0.1 means 10%).
    pub mape: f64,
}

/// MSE, MAE and MAPE of `pred` against `actual`. MAPE divides by `|actual|`
/// and is undefined when any actual value is zero; the error then still
/// carries MSE and MAE.
pub fn evaluate(pred: &[f64], actual: &[f64]) -> Result<Metrics> {
    if pred.len() != actual.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} actual values",
            pred.len(),
            actual.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InsufficientData("nothing to evaluate".into()));
    }
    let n = pred.len() as f64;
    let (mut se, mut ae, mut pe) = (0.0, 0.0, 0.0);
    let mut zero = None;
    for (i, (p, y)) in pred.iter().zip(actual).enumerate() {
        let e = y - p;
        se += e * e;
        ae += e.abs();
        if *y == 0.0 {
            zero.get_or_insert(i);
        } else {
            pe += e.abs() / y.abs();
        }
    }
    let (mse, mae) = (se / n, ae / n);
    if let Some(index) = zero {
        return Err(Error::MapeUndefined { index, mse, mae });
    }
    Ok(Metrics { mse, mae, mape: pe / n })
}
