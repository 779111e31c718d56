use super::frame::{SeriesFragment, TimeSeriesFrame, DATE_FORMAT};
use crate::error::{Error, Result};

/// Puts every exogenous series on the target's date index.
///
/// Each exogenous column is forward-filled from its latest observation on or
/// before each target date. Leading target dates where some column has no
/// observation yet are dropped. The target fragment must be complete; its
/// column `target_name` becomes the frame target and its other columns are
/// carried along as features.
pub fn align_series(
    target: &SeriesFragment,
    target_name: &str,
    exogenous: &[SeriesFragment],
) -> Result<TimeSeriesFrame> {
    if target.is_empty() {
        return Err(Error::InsufficientData("target series is empty".into()));
    }
    if target.column(target_name).is_none() {
        return Err(Error::Config(format!("target column '{target_name}' not found")));
    }
    let mut names = Vec::new();
    let mut filled: Vec<Vec<Option<f64>>> = Vec::new();
    for (name, col) in target.names.iter().zip(&target.columns) {
        if let Some(i) = col.iter().position(Option::is_none) {
            return Err(Error::MissingValue {
                column: name.clone(),
                date: target.dates[i].format(DATE_FORMAT).to_string(),
            });
        }
        names.push(name.clone());
        filled.push(col.clone());
    }

    let (first, last) = (target.dates[0], target.dates[target.len() - 1]);
    for frag in exogenous {
        for (name, col) in frag.names.iter().zip(&frag.columns) {
            let observed = || frag.dates.iter().zip(col).filter(|(_, v)| v.is_some()).map(|(d, _)| *d);
            let overlaps = match (observed().next(), observed().next_back()) {
                (Some(lo), Some(hi)) => lo <= last && hi >= first,
                _ => false,
            };
            if !overlaps {
                return Err(Error::Coverage(format!(
                    "series '{name}' has no observations within the target span {} to {}",
                    first.format(DATE_FORMAT),
                    last.format(DATE_FORMAT)
                )));
            }
            let mut out = Vec::with_capacity(target.len());
            let mut k = 0;
            let mut current = None;
            for d in &target.dates {
                while k < frag.len() && frag.dates[k] <= *d {
                    if col[k].is_some() {
                        current = col[k];
                    }
                    k += 1;
                }
                out.push(current);
            }
            names.push(name.clone());
            filled.push(out);
        }
    }

    let start = (0..target.len())
        .find(|&t| filled.iter().all(|c| c[t].is_some()))
        .ok_or_else(|| Error::Coverage("no date on which every series has been observed".into()))?;
    let columns = filled
        .into_iter()
        .map(|c| c[start..].iter().map(|v| v.unwrap_or(f64::NAN)).collect())
        .collect();
    TimeSeriesFrame::new(target.dates[start..].to_vec(), names, columns, target_name)
}
