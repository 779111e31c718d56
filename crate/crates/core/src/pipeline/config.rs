use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::align::align_series;
use super::frame::TimeSeriesFrame;
use super::io::load_csv_series;
use crate::error::{Error, Result};
use crate::neural::ModelConfig;
use crate::regsel::SelectionOptions;
use crate::synth::{generate_synthetic_panel, GroundTruth, SyntheticSpec};

/// One JSON document driving selection, training and comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub selection: SelectionConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub compare: CompareConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data: DataSource::Synthetic(SyntheticSpec::default()),
            selection: SelectionConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            compare: CompareConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Synthetic(SyntheticSpec),
    Csv(CsvSource),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSource {
    /// File holding the target series. Relative paths resolve against the
    /// config file's directory.
    pub target_path: PathBuf,
    pub target_column: String,
    #[serde(default = "default_date_column")]
    pub date_column: String,
    #[serde(default)]
    pub exogenous: Vec<ExogenousFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExogenousFile {
    pub path: PathBuf,
    /// Columns to read; empty reads every non-date column.
    #[serde(default)]
    pub columns: Vec<String>,
}

fn default_date_column() -> String {
    "date".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionConfig {
    /// Regress `target_t` on features at `t − lag`.
    pub lag: usize,
    pub ridge: SelectionOptions,
    pub scad: SelectionOptions,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            lag: 1,
            ridge: SelectionOptions::default(),
            scad: SelectionOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    /// Ridge-screened features (`rr_selection.json`).
    Rr,
    /// SCAD support (`scad_selection.json`).
    Scad,
    /// Every exogenous column.
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub features: FeatureSet,
    pub train_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            features: FeatureSet::Rr,
            train_fraction: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareConfig {
    /// Seeds `model.seed, model.seed + 1, …`.
    pub seeds: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig { seeds: 3 }
    }
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut c = Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let DataSource::Csv(src) = &mut c.data {
            let base = path.parent().unwrap_or(Path::new("."));
            src.target_path = base.join(&src.target_path);
            for f in &mut src.exogenous {
                f.path = base.join(&f.path);
            }
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if let DataSource::Synthetic(spec) = &self.data {
            spec.validate()?;
        }
        if self.selection.lag == 0 {
            return Err(Error::Config("selection lag must be >= 1".into()));
        }
        self.selection.ridge.validate()?;
        self.selection.scad.validate()?;
        self.model.validate()?;
        if !(self.train.train_fraction > 0.0 && self.train.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train.train_fraction
            )));
        }
        if self.compare.seeds == 0 {
            return Err(Error::Config("compare.seeds must be >= 1".into()));
        }
        Ok(())
    }

    /// The aligned panel, plus its ground truth when synthetic.
    pub fn load_frame(&self) -> Result<(TimeSeriesFrame, Option<GroundTruth>)> {
        match &self.data {
            DataSource::Synthetic(spec) => {
                let (f, t) = generate_synthetic_panel(spec)?;
                Ok((f, Some(t)))
            }
            DataSource::Csv(src) => {
                let target = load_csv_series(
                    &src.target_path,
                    &src.date_column,
                    std::slice::from_ref(&src.target_column),
                )?;
                let exo = src
                    .exogenous
                    .iter()
                    .map(|f| load_csv_series(&f.path, &src.date_column, &f.columns))
                    .collect::<Result<Vec<_>>>()?;
                Ok((align_series(&target, &src.target_column, &exo)?, None))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        let back = ExperimentConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert_eq!(ExperimentConfig::from_json("{}").unwrap(), c);
    }

    #[test]
    fn unknown_fields_and_bad_values_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"modle": {}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"model": {"epoch": 3}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"model": {"learning_rate": -1}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"train": {"train_fraction": 1.5}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"data": {"synthetic": {"n_days": 5}}}"#).is_err());
    }

    #[test]
    fn csv_source_parses() {
        let c = ExperimentConfig::from_json(
            r#"{"data": {"csv": {"target_path": "p.csv", "target_column": "close",
                "exogenous": [{"path": "x.csv"}]}}}"#,
        )
        .unwrap();
        match c.data {
            DataSource::Csv(src) => {
                assert_eq!(src.date_column, "date");
                assert!(src.exogenous[0].columns.is_empty());
            }
            _ => panic!(),
        }
    }
}
