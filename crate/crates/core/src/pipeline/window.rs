use chrono::NaiveDate;

use super::frame::TimeSeriesFrame;
use crate::error::{Error, Result};
use crate::numcore::Tensor;

pub const DEFAULT_WINDOW: usize = 5;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.9;

/// Supervised samples cut from a frame: `T×F` input blocks over every frame
/// column (target first) and the target `horizon` rows after each block.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowBatch {
    pub inputs: Vec<Tensor>,
    /// Targets on the frame's scale (standardized when the frame is).
    pub targets: Vec<f64>,
    /// Targets on the original price scale, for reporting.
    pub actuals: Vec<f64>,
    /// First row of each input block.
    pub starts: Vec<usize>,
    pub input_end_dates: Vec<NaiveDate>,
    pub target_dates: Vec<NaiveDate>,
}

impl WindowBatch {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Replaces `actuals` with the original-scale target aligned to the frame
    /// the batch was cut from.
    pub fn with_actuals(mut self, original_target: &[f64], horizon_offset: usize) -> Result<Self> {
        let mut actuals = Vec::with_capacity(self.len());
        for &s in &self.starts {
            let row = s + horizon_offset;
            actuals.push(
                *original_target
                    .get(row)
                    .ok_or_else(|| Error::Shape(format!("original target has no row {row}")))?,
            );
        }
        self.actuals = actuals;
        Ok(self)
    }

    fn take(&self, range: std::ops::Range<usize>) -> WindowBatch {
        WindowBatch {
            inputs: self.inputs[range.clone()].to_vec(),
            targets: self.targets[range.clone()].to_vec(),
            actuals: self.actuals[range.clone()].to_vec(),
            starts: self.starts[range.clone()].to_vec(),
            input_end_dates: self.input_end_dates[range.clone()].to_vec(),
            target_dates: self.target_dates[range].to_vec(),
        }
    }

    /// Every input block ends strictly before its target date.
    pub fn no_lookahead(&self) -> bool {
        self.input_end_dates.iter().zip(&self.target_dates).all(|(a, b)| a < b)
    }
}

/// Sample `i` takes rows `[i, i+window)` as input and row
/// `i + window + horizon − 1` as target, giving `N − window − horizon + 1`
/// samples.
pub fn make_windows(frame: &TimeSeriesFrame, window: usize, horizon: usize) -> Result<WindowBatch> {
    if window == 0 || horizon == 0 {
        return Err(Error::Config("window and horizon must be >= 1".into()));
    }
    let n = frame.len();
    if n < window + horizon {
        return Err(Error::InsufficientData(format!(
            "{n} rows give no samples for window {window} and horizon {horizon}"
        )));
    }
    let mut names = vec![frame.target_name().to_string()];
    names.extend(frame.feature_names());
    let cols: Vec<&[f64]> = names.iter().map(|c| frame.column(c).unwrap_or_default()).collect();
    let f = cols.len();
    let count = n - window - horizon + 1;
    let offset = window + horizon - 1;
    let target = frame.target();
    let mut batch = WindowBatch {
        inputs: Vec::with_capacity(count),
        targets: Vec::with_capacity(count),
        actuals: Vec::with_capacity(count),
        starts: Vec::with_capacity(count),
        input_end_dates: Vec::with_capacity(count),
        target_dates: Vec::with_capacity(count),
    };
    for i in 0..count {
        let mut block = Vec::with_capacity(window * f);
        for t in i..i + window {
            block.extend(cols.iter().map(|c| c[t]));
        }
        batch.inputs.push(Tensor::matrix(window, f, block)?);
        batch.targets.push(target[i + offset]);
        batch.actuals.push(target[i + offset]);
        batch.starts.push(i);
        batch.input_end_dates.push(frame.dates()[i + window - 1]);
        batch.target_dates.push(frame.dates()[i + offset]);
    }
    Ok(batch)
}

/// Number of training samples for `n` samples: `floor(fraction · n)`.
pub fn train_count(n: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction must lie in (0, 1), got {fraction}"
        )));
    }
    if n < 2 {
        return Err(Error::InsufficientData(format!("{n} samples cannot be split")));
    }
    let k = (fraction * n as f64).floor() as usize;
    if k == 0 || k == n {
        return Err(Error::InsufficientData(format!(
            "fraction {fraction} of {n} samples leaves an empty side"
        )));
    }
    Ok(k)
}

/// First `floor(fraction · n)` samples train, the rest test. Order is kept.
pub fn chrono_split(batch: &WindowBatch, fraction: f64) -> Result<(WindowBatch, WindowBatch)> {
    let k = train_count(batch.len(), fraction)?;
    Ok((batch.take(0..k), batch.take(k..batch.len())))
}
