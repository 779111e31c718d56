use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::frame::{TimeSeriesFrame, DATE_FORMAT};
use super::metrics::{evaluate, Metrics};
use super::scaler::StandardScaler;
use super::window::{chrono_split, make_windows, train_count, WindowBatch};
use crate::error::{Error, Result};
use crate::neural::{adam_step, AdamState, Model, ModelConfig};
use crate::numcore::Rng;

const HORIZON: usize = 1;
const CHECKPOINT_FORMAT: &str = "hybridcast-checkpoint";
const CHECKPOINT_VERSION: u32 = 1;
/// An epoch loss this many times the larger of the untrained loss and 1 (the
/// loss of predicting the mean of a standardized target) counts as divergence.
const DIVERGENCE_FACTOR: f64 = 10.0;
const SHUFFLE_SALT: u64 = 0x5851_f42d_4c95_7f2d;

/// Rows `[0, n)` that training may see: every input row and target of the
/// training windows. Selection and scaling are fitted on this prefix only.
pub fn training_rows(frame_len: usize, window: usize, train_fraction: f64) -> Result<usize> {
    if frame_len < window + HORIZON {
        return Err(Error::InsufficientData(format!(
            "{frame_len} rows are too few for window {window}"
        )));
    }
    let samples = frame_len - window - HORIZON + 1;
    Ok(train_count(samples, train_fraction)? + window + HORIZON - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub date: NaiveDate,
    pub actual: f64,
    pub predicted: f64,
}

/// Everything needed to rebuild the test span and predict it again.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub target: String,
    /// Exogenous inputs in window order (after the target).
    pub features: Vec<String>,
    pub train_fraction: f64,
    pub seed: u64,
    pub scaler: StandardScaler,
    pub model: Model,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(s).map_err(|e| Error::Checkpoint(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unknown format '{}'", self.format)));
        }
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {} (expected {CHECKPOINT_VERSION})",
                self.version
            )));
        }
        let mut names = vec![self.target.clone()];
        names.extend(self.features.iter().cloned());
        if self.scaler.names != names || self.scaler.means.len() != names.len() || self.scaler.sds.len() != names.len()
        {
            return Err(Error::Checkpoint(
                "scaler columns do not match target and features".into(),
            ));
        }
        if self.scaler.means.iter().chain(&self.scaler.sds).any(|v| !v.is_finite())
            || self.scaler.sds.iter().any(|s| !(*s > 0.0))
        {
            return Err(Error::Checkpoint("scaler holds invalid moments".into()));
        }
        if self.model.features() != names.len() {
            return Err(Error::Checkpoint(format!(
                "model takes {} inputs but {} columns are recorded",
                self.model.features(),
                names.len()
            )));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Checkpoint("train_fraction outside (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    /// Mean squared error (standardized scale) of the full training set
    /// before any update.
    pub initial_loss: f64,
    /// Same quantity after the last epoch.
    pub final_loss: f64,
    /// Mean per-sample loss seen during each epoch.
    pub loss_history: Vec<f64>,
    pub metrics: Metrics,
    pub predictions: Vec<Prediction>,
    pub n_train: usize,
    pub n_test: usize,
}

struct Prepared {
    scaler: StandardScaler,
    train: WindowBatch,
    test: WindowBatch,
}

fn prepare(
    frame: &TimeSeriesFrame,
    features: &[String],
    window: usize,
    train_fraction: f64,
    scaler: Option<&StandardScaler>,
) -> Result<Prepared> {
    let sub = frame.select(features)?;
    let scaler = match scaler {
        Some(s) => s.clone(),
        None => StandardScaler::fit(&sub, training_rows(sub.len(), window, train_fraction)?)?,
    };
    let batch =
        make_windows(&scaler.transform(&sub)?, window, HORIZON)?.with_actuals(sub.target(), window + HORIZON - 1)?;
    let (train, test) = chrono_split(&batch, train_fraction)?;
    Ok(Prepared { scaler, train, test })
}

fn dataset_loss(model: &Model, batch: &WindowBatch) -> Result<f64> {
    let mut s = 0.0;
    for (x, y) in batch.inputs.iter().zip(&batch.targets) {
        s += (model.predict(x)? - y).powi(2);
    }
    Ok(s / batch.len() as f64)
}

fn predict_batch(model: &Model, scaler: &StandardScaler, batch: &WindowBatch) -> Result<(Metrics, Vec<Prediction>)> {
    let z = batch
        .inputs
        .iter()
        .map(|x| model.predict(x))
        .collect::<Result<Vec<_>>>()?;
    let pred = scaler.inverse_values(&scaler.names[0], &z)?;
    let metrics = evaluate(&pred, &batch.actuals)?;
    let predictions = batch
        .target_dates
        .iter()
        .zip(&batch.actuals)
        .zip(pred)
        .map(|((d, a), p)| Prediction {
            date: *d,
            actual: *a,
            predicted: p,
        })
        .collect();
    Ok((metrics, predictions))
}

/// Scale, window, split, train with mini-batch Adam, then predict the test
/// span and score it on the original scale. `features` are the exogenous
/// columns; the target's own history is always an input.
pub fn train_model(
    frame: &TimeSeriesFrame,
    features: &[String],
    config: &ModelConfig,
    train_fraction: f64,
) -> Result<TrainOutcome> {
    config.validate()?;
    let prep = prepare(frame, features, config.window, train_fraction, None)?;
    let mut model = Model::new(config, features.len() + 1)?;
    let adam = config.adam();
    let mut state = AdamState::new();
    let mut rng = Rng::new(config.seed ^ SHUFFLE_SALT);
    let train = &prep.train;

    let initial_loss = dataset_loss(&model, train)?;
    let limit = DIVERGENCE_FACTOR * initial_loss.max(1.0);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        rng.shuffle(&mut order);
        let mut total = 0.0;
        let mut grad = model.zeros_like();
        for chunk in order.chunks(config.batch_size) {
            grad.blocks_mut().into_iter().for_each(|(_, b)| b.fill(0.0));
            let scale = 2.0 / chunk.len() as f64;
            for &i in chunk {
                let (y, cache) = model.forward(&train.inputs[i])?;
                let e = y - train.targets[i];
                total += e * e;
                model.backward_into(&cache, scale * e, &mut grad)?;
            }
            let grads: Vec<&[f64]> = grad.blocks().into_iter().map(|(_, b)| b).collect();
            let mut params: Vec<&mut [f64]> = model.blocks_mut().into_iter().map(|(_, b)| b).collect();
            adam_step(&mut state, &adam, &mut params, &grads)?;
        }
        let loss = total / train.len() as f64;
        if !(loss <= limit) {
            return Err(Error::Divergence { epoch, loss });
        }
        log::debug!("{} epoch {epoch}: loss {loss:.6}", config.variant.as_str());
        history.push(loss);
    }
    let final_loss = dataset_loss(&model, train)?;
    if !final_loss.is_finite() || final_loss > limit {
        return Err(Error::Divergence {
            epoch: config.epochs,
            loss: final_loss,
        });
    }

    let (metrics, predictions) = predict_batch(&model, &prep.scaler, &prep.test)?;
    let checkpoint = Checkpoint {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        target: frame.target_name().to_string(),
        features: features.to_vec(),
        train_fraction,
        seed: config.seed,
        scaler: prep.scaler,
        model,
    };
    Ok(TrainOutcome {
        checkpoint,
        initial_loss,
        final_loss,
        loss_history: history,
        metrics,
        predictions,
        n_train: prep.train.len(),
        n_test: prep.test.len(),
    })
}

/// Re-scores a checkpoint on the test span of `frame`.
pub fn evaluate_checkpoint(frame: &TimeSeriesFrame, ckpt: &Checkpoint) -> Result<(Metrics, Vec<Prediction>)> {
    ckpt.validate()?;
    if frame.target_name() != ckpt.target {
        return Err(Error::Config(format!(
            "checkpoint predicts '{}' but the data target is '{}'",
            ckpt.target,
            frame.target_name()
        )));
    }
    let window = ckpt.model.config().window;
    let prep = prepare(frame, &ckpt.features, window, ckpt.train_fraction, Some(&ckpt.scaler))?;
    predict_batch(&ckpt.model, &prep.scaler, &prep.test)
}

/// `date,actual,predicted` with shortest round-trip floats.
pub fn write_predictions_csv<W: std::io::Write>(predictions: &[Prediction], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Csv(e.to_string());
    w.write_record(["date", "actual", "predicted"]).map_err(err)?;
    for p in predictions {
        w.write_record([
            p.date.format(DATE_FORMAT).to_string(),
            p.actual.to_string(),
            p.predicted.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}
