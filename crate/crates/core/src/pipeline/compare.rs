use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::frame::TimeSeriesFrame;
use super::train::train_model;
use crate::error::{Error, Result};
use crate::neural::{ModelConfig, Variant};
use crate::regsel::SelectionReport;

/// Offset between model seeds of neighbouring rows for the same run seed.
const ROW_SEED_STRIDE: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dataset {
    #[serde(rename = "RR")]
    Rr,
    #[serde(rename = "SCAD")]
    Scad,
}

impl Dataset {
    pub fn as_str(self) -> &'static str {
        match self {
            Dataset::Rr => "RR",
            Dataset::Scad => "SCAD",
        }
    }
}

/// The five compared models, in table order.
pub const COMPARISON_ROWS: [(Dataset, Variant); 5] = [
    (Dataset::Rr, Variant::Cnn),
    (Dataset::Rr, Variant::Lstm),
    (Dataset::Rr, Variant::CnnLstm),
    (Dataset::Rr, Variant::DilatedCnnLstm),
    (Dataset::Scad, Variant::DilatedCnnLstm),
];

pub fn row_label(dataset: Dataset, variant: Variant) -> String {
    format!("{}-{}", dataset.as_str(), variant.label())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub dataset: Dataset,
    pub variant: Variant,
    pub features: usize,
    pub mse: f64,
    pub mae: f64,
    pub mape: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonCell {
    pub label: String,
    pub seed: u64,
    pub model_seed: u64,
    pub mse: f64,
    pub mae: f64,
    pub mape: f64,
    pub initial_train_loss: f64,
    pub final_train_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub seeds: Vec<u64>,
    pub epochs: usize,
    /// Mean metrics over seeds, one row per compared model.
    pub rows: Vec<ComparisonRow>,
    pub cells: Vec<ComparisonCell>,
    /// Seeds on which RR-DILATED_CNN-LSTM had lower test MSE than RR-CNN-LSTM.
    pub dilated_wins: usize,
    pub dilated_win_rate: f64,
}

impl ComparisonReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Aligned text table: model, MSE, MAE, MAPE, then the win-rate line.
    pub fn to_table(&self) -> String {
        let w = self.rows.iter().map(|r| r.label.len()).max().unwrap_or(5).max(5);
        let mut s = format!("{:<w$}  {:>12}  {:>12}  {:>12}\n", "Model", "MSE", "MAE", "MAPE");
        for r in &self.rows {
            s += &format!("{:<w$}  {:>12.6}  {:>12.6}  {:>12.6}\n", r.label, r.mse, r.mae, r.mape);
        }
        s += &format!(
            "\nDILATED_CNN-LSTM beat CNN-LSTM on test MSE in {} of {} seeds (win rate {:.3})\n",
            self.dilated_wins,
            self.seeds.len(),
            self.dilated_win_rate
        );
        s
    }
}

/// Trains every (model, seed) cell, concurrently, and averages per model.
/// The cell for row `r` and seed `s` uses model seed `s + 1000·r`.
pub fn compare_variants(
    frame: &TimeSeriesFrame,
    rr: &SelectionReport,
    scad: &SelectionReport,
    base: &ModelConfig,
    seeds: &[u64],
    train_fraction: f64,
) -> Result<ComparisonReport> {
    let rr_features = rr.selected_names();
    let scad_features = scad.selected_names();
    if rr_features.is_empty() || scad_features.is_empty() {
        return Err(Error::InsufficientData(format!(
            "comparison needs nonempty selections (rr {}, scad {})",
            rr_features.len(),
            scad_features.len()
        )));
    }
    if seeds.is_empty() {
        return Err(Error::Config("comparison needs at least one seed".into()));
    }
    let jobs: Vec<(usize, u64)> = seeds
        .iter()
        .flat_map(|&s| (0..COMPARISON_ROWS.len()).map(move |r| (r, s)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(r, seed)| {
            let (dataset, variant) = COMPARISON_ROWS[r];
            let model_seed = seed.wrapping_add(ROW_SEED_STRIDE * r as u64);
            let cfg = ModelConfig {
                seed: model_seed,
                ..base.for_variant(variant)
            };
            let feats = match dataset {
                Dataset::Rr => &rr_features,
                Dataset::Scad => &scad_features,
            };
            let out = train_model(frame, feats, &cfg, train_fraction)?;
            Ok(ComparisonCell {
                label: row_label(dataset, variant),
                seed,
                model_seed,
                mse: out.metrics.mse,
                mae: out.metrics.mae,
                mape: out.metrics.mape,
                initial_train_loss: out.initial_loss,
                final_train_loss: out.final_loss,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n = seeds.len() as f64;
    let rows = COMPARISON_ROWS
        .iter()
        .map(|&(dataset, variant)| {
            let label = row_label(dataset, variant);
            let mine: Vec<&ComparisonCell> = cells.iter().filter(|c| c.label == label).collect();
            ComparisonRow {
                features: match dataset {
                    Dataset::Rr => rr_features.len(),
                    Dataset::Scad => scad_features.len(),
                },
                mse: mine.iter().map(|c| c.mse).sum::<f64>() / n,
                mae: mine.iter().map(|c| c.mae).sum::<f64>() / n,
                mape: mine.iter().map(|c| c.mape).sum::<f64>() / n,
                label,
                dataset,
                variant,
            }
        })
        .collect();
    let mse_of = |label: &str, seed: u64| {
        cells
            .iter()
            .find(|c| c.label == label && c.seed == seed)
            .map_or(f64::NAN, |c| c.mse)
    };
    let dilated = row_label(Dataset::Rr, Variant::DilatedCnnLstm);
    let plain = row_label(Dataset::Rr, Variant::CnnLstm);
    let dilated_wins = seeds
        .iter()
        .filter(|&&s| mse_of(&dilated, s) < mse_of(&plain, s))
        .count();
    Ok(ComparisonReport {
        seeds: seeds.to_vec(),
        epochs: base.epochs,
        rows,
        cells,
        dilated_wins,
        dilated_win_rate: dilated_wins as f64 / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels() {
        let labels: Vec<String> = COMPARISON_ROWS.iter().map(|&(d, v)| row_label(d, v)).collect();
        assert_eq!(
            labels,
            [
                "RR-CNN",
                "RR-LSTM",
                "RR-CNN-LSTM",
                "RR-DILATED_CNN-LSTM",
                "SCAD-DILATED_CNN-LSTM"
            ]
        );
    }
}
