use super::config::ExperimentConfig;
use super::frame::TimeSeriesFrame;
use super::train::training_rows;
use crate::error::{Error, Result};
use crate::numcore::Tensor;
use crate::regsel::{run_selection, PenaltyKind, Selection, SelectionOptions};

/// Lagged regression design over rows `[0, end)`: response `target_t`,
/// predictors `x_{t−lag}` for every non-target column.
pub fn lagged_design(frame: &TimeSeriesFrame, lag: usize, end: usize) -> Result<(Tensor, Vec<f64>, Vec<String>)> {
    if lag == 0 {
        return Err(Error::Config("selection lag must be >= 1".into()));
    }
    let end = end.min(frame.len());
    if end <= lag + 2 {
        return Err(Error::InsufficientData(format!(
            "{end} rows are too few for a lag-{lag} regression"
        )));
    }
    let names = frame.feature_names();
    let cols: Vec<&[f64]> = names.iter().map(|n| frame.column(n).unwrap_or_default()).collect();
    let rows = end - lag;
    let mut data = Vec::with_capacity(rows * names.len());
    for t in lag..end {
        data.extend(cols.iter().map(|c| c[t - lag]));
    }
    let y = frame.target()[lag..end].to_vec();
    Ok((Tensor::matrix(rows, names.len(), data)?, y, names))
}

/// Runs feature selection on the chronological training span of `frame`.
pub fn select_on_frame(
    frame: &TimeSeriesFrame,
    kind: PenaltyKind,
    opts: &SelectionOptions,
    lag: usize,
    train_rows: usize,
) -> Result<Selection> {
    let (x, y, names) = lagged_design(frame, lag, train_rows)?;
    run_selection(&x, &y, &names, kind, opts)
}

/// Ridge ("dataset 1") and SCAD ("dataset 2") selections fitted on the
/// rows the forecaster will train on.
pub fn select_datasets(frame: &TimeSeriesFrame, cfg: &ExperimentConfig) -> Result<(Selection, Selection)> {
    let rows = training_rows(frame.len(), cfg.model.window, cfg.train.train_fraction)?;
    let sel = &cfg.selection;
    let rr = select_on_frame(frame, PenaltyKind::Ridge, &sel.ridge, sel.lag, rows)?;
    let scad = select_on_frame(frame, PenaltyKind::Scad, &sel.scad, sel.lag, rows)?;
    Ok((rr, scad))
}
