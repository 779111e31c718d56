//! Data preparation, training and evaluation around the forecaster.

mod align;
mod compare;
mod config;
mod frame;
mod io;
mod metrics;
mod scaler;
mod select;
mod train;
mod window;

pub use align::align_series;
pub use compare::{
    compare_variants, row_label, ComparisonCell, ComparisonReport, ComparisonRow, Dataset, COMPARISON_ROWS,
};
pub use config::{
    CompareConfig, CsvSource, DataSource, ExogenousFile, ExperimentConfig, FeatureSet, SelectionConfig, TrainConfig,
};
pub use frame::{SeriesFragment, TimeSeriesFrame, DATE_FORMAT};
pub use io::{load_csv_series, parse_csv_series};
pub use metrics::{evaluate, Metrics};
pub use scaler::StandardScaler;
pub use select::{lagged_design, select_datasets, select_on_frame};
pub use train::{
    evaluate_checkpoint, train_model, training_rows, write_predictions_csv, Checkpoint, Prediction, TrainOutcome,
};
pub use window::{chrono_split, make_windows, train_count, WindowBatch, DEFAULT_TRAIN_FRACTION, DEFAULT_WINDOW};
