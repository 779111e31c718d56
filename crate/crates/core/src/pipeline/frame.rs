use std::io::Write;

use chrono::NaiveDate;

use crate::error::{Error, Result};

pub const DATE_FORMAT: &str = "%Y-%m-%d";

/// Raw series as read from one CSV file: ascending unique dates, possibly
/// with missing cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFragment {
    pub dates: Vec<NaiveDate>,
    pub names: Vec<String>,
    /// One vector per name, each aligned with `dates`.
    pub columns: Vec<Vec<Option<f64>>>,
}

impl SeriesFragment {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&[Option<f64>]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }
}

/// Date-indexed panel with no missing values. One column is the target.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesFrame {
    dates: Vec<NaiveDate>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    target: String,
}

impl TimeSeriesFrame {
    pub fn new(
        dates: Vec<NaiveDate>,
        names: Vec<String>,
        columns: Vec<Vec<f64>>,
        target: impl Into<String>,
    ) -> Result<Self> {
        let target = target.into();
        if names.len() != columns.len() {
            return Err(Error::Shape(format!(
                "{} column names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(if w[0] == w[1] {
                Error::DuplicateDate {
                    date: w[0].format(DATE_FORMAT).to_string(),
                }
            } else {
                Error::Parse {
                    row: 0,
                    column: "date".into(),
                    message: format!("dates not increasing at {}", w[1]),
                }
            });
        }
        let mut seen = std::collections::HashSet::new();
        for (name, col) in names.iter().zip(&columns) {
            if !seen.insert(name.as_str()) {
                return Err(Error::Config(format!("duplicate column name '{name}'")));
            }
            if col.len() != dates.len() {
                return Err(Error::Shape(format!(
                    "column '{name}' has {} values for {} dates",
                    col.len(),
                    dates.len()
                )));
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::MissingValue {
                    column: name.clone(),
                    date: dates[i].format(DATE_FORMAT).to_string(),
                });
            }
        }
        if !names.contains(&target) {
            return Err(Error::Config(format!("target column '{target}' not in frame")));
        }
        Ok(TimeSeriesFrame {
            dates,
            names,
            columns,
            target,
        })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn target_name(&self) -> &str {
        &self.target
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn target(&self) -> &[f64] {
        self.column(&self.target).unwrap_or_default()
    }

    /// Every column except the target, in frame order.
    pub fn feature_names(&self) -> Vec<String> {
        self.names.iter().filter(|n| **n != self.target).cloned().collect()
    }

    /// New frame with the target first, then `features` in the given order.
    pub fn select(&self, features: &[String]) -> Result<TimeSeriesFrame> {
        let mut names = vec![self.target.clone()];
        let mut columns = vec![self.target().to_vec()];
        for f in features {
            if *f == self.target {
                continue;
            }
            let col = self
                .column(f)
                .ok_or_else(|| Error::Config(format!("feature '{f}' not present in data")))?;
            names.push(f.clone());
            columns.push(col.to_vec());
        }
        TimeSeriesFrame::new(self.dates.clone(), names, columns, self.target.clone())
    }

    /// Rows `[start, end)` as a new frame.
    pub fn slice(&self, start: usize, end: usize) -> Result<TimeSeriesFrame> {
        if start > end || end > self.len() {
            return Err(Error::Shape(format!(
                "row range {start}..{end} outside frame of {} rows",
                self.len()
            )));
        }
        TimeSeriesFrame::new(
            self.dates[start..end].to_vec(),
            self.names.clone(),
            self.columns.iter().map(|c| c[start..end].to_vec()).collect(),
            self.target.clone(),
        )
    }

    /// Writes `date,<columns...>` with shortest round-trip float formatting.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Csv(e.to_string());
        let mut header = vec!["date".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header).map_err(err)?;
        let mut rec = Vec::with_capacity(header.len());
        for (i, d) in self.dates.iter().enumerate() {
            rec.clear();
            rec.push(d.format(DATE_FORMAT).to_string());
            rec.extend(self.columns.iter().map(|c| c[i].to_string()));
            w.write_record(&rec).map_err(err)?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }
}
