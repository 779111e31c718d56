use serde::{Deserialize, Serialize};

use super::frame::TimeSeriesFrame;
use crate::error::{Error, Result};

/// Per-column z-score parameters, fitted on a training prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StandardScaler {
    pub names: Vec<String>,
    pub means: Vec<f64>,
    /// Sample standard deviations (n − 1 denominator).
    pub sds: Vec<f64>,
}

impl StandardScaler {
    /// Fits on rows `[0, train_end)` of every column of `frame`.
    pub fn fit(frame: &TimeSeriesFrame, train_end: usize) -> Result<Self> {
        if train_end < 2 || train_end > frame.len() {
            return Err(Error::InsufficientData(format!(
                "scaler needs 2..={} training rows, got {train_end}",
                frame.len()
            )));
        }
        let mut means = Vec::with_capacity(frame.names().len());
        let mut sds = Vec::with_capacity(frame.names().len());
        for name in frame.names() {
            let col = &frame.column(name).unwrap_or_default()[..train_end];
            let n = col.len() as f64;
            let mu = col.iter().sum::<f64>() / n;
            let sd = (col.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            if !(sd > 1e-12 * mu.abs().max(1.0)) {
                return Err(Error::ConstantColumn { column: name.clone() });
            }
            means.push(mu);
            sds.push(sd);
        }
        Ok(StandardScaler {
            names: frame.names().to_vec(),
            means,
            sds,
        })
    }

    fn index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Config(format!("scaler has no column '{name}'")))
    }

    /// Standardizes every column of `frame`; column names must match the fit.
    pub fn transform(&self, frame: &TimeSeriesFrame) -> Result<TimeSeriesFrame> {
        if frame.names() != self.names.as_slice() {
            return Err(Error::Config("frame columns differ from the fitted scaler".into()));
        }
        let columns = self
            .names
            .iter()
            .enumerate()
            .map(|(j, n)| {
                frame
                    .column(n)
                    .unwrap_or_default()
                    .iter()
                    .map(|v| (v - self.means[j]) / self.sds[j])
                    .collect()
            })
            .collect();
        TimeSeriesFrame::new(frame.dates().to_vec(), self.names.clone(), columns, frame.target_name())
    }

    pub fn inverse(&self, frame: &TimeSeriesFrame) -> Result<TimeSeriesFrame> {
        if frame.names() != self.names.as_slice() {
            return Err(Error::Config("frame columns differ from the fitted scaler".into()));
        }
        let columns = self
            .names
            .iter()
            .map(|n| self.inverse_values(n, frame.column(n).unwrap_or_default()))
            .collect::<Result<Vec<_>>>()?;
        TimeSeriesFrame::new(frame.dates().to_vec(), self.names.clone(), columns, frame.target_name())
    }

    pub fn transform_values(&self, column: &str, values: &[f64]) -> Result<Vec<f64>> {
        let j = self.index(column)?;
        Ok(values.iter().map(|v| (v - self.means[j]) / self.sds[j]).collect())
    }

    pub fn inverse_values(&self, column: &str, values: &[f64]) -> Result<Vec<f64>> {
        let j = self.index(column)?;
        Ok(values.iter().map(|z| z * self.sds[j] + self.means[j]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn frame(cols: Vec<Vec<f64>>) -> TimeSeriesFrame {
        let n = cols[0].len();
        let dates = (0..n)
            .map(|i| NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Duration::days(i as i64))
            .collect();
        let names = (0..cols.len()).map(|j| format!("c{j}")).collect();
        TimeSeriesFrame::new(dates, names, cols, "c0").unwrap()
    }

    #[test]
    fn two_point_column() {
        let f = frame(vec![vec![1.0, 3.0]]);
        let s = StandardScaler::fit(&f, 2).unwrap();
        assert_eq!(s.means[0], 2.0);
        assert!((s.sds[0] - 2f64.sqrt()).abs() < 1e-15);
        let z = s.transform(&f).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((z.target()[0] + h).abs() < 1e-4 && (z.target()[1] - h).abs() < 1e-4);
    }

    #[test]
    fn round_trip() {
        let f = frame(vec![vec![3.2, -1.0, 8.5, 1e3, 0.25], vec![1.0, 2.0, 4.0, 8.0, 16.0]]);
        let s = StandardScaler::fit(&f, 3).unwrap();
        let back = s.inverse(&s.transform(&f).unwrap()).unwrap();
        for n in f.names() {
            for (a, b) in f.column(n).unwrap().iter().zip(back.column(n).unwrap()) {
                assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn constant_column_named() {
        let f = frame(vec![vec![1.0, 2.0, 3.0], vec![5.0, 5.0, 5.0]]);
        match StandardScaler::fit(&f, 3) {
            Err(Error::ConstantColumn { column }) => assert_eq!(column, "c1"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn uses_only_training_prefix() {
        let f = frame(vec![vec![0.0, 2.0, 100.0, 200.0]]);
        let train = StandardScaler::fit(&f, 2).unwrap();
        let full = StandardScaler::fit(&f, 4).unwrap();
        assert_eq!(train.means[0], 1.0);
        assert_ne!(train, full);
    }
}
