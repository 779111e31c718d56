use serde::{Deserialize, Serialize};

use super::adam::AdamConfig;
use super::conv::{Conv2dLayer, ConvCache};
use super::dense::Dense;
use super::lstm::{lstm_backward_into, lstm_forward, LstmParams, LstmStepCache};
use crate::error::{Error, Result};
use crate::numcore::{Rng, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Cnn,
    Lstm,
    CnnLstm,
    DilatedCnnLstm,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Cnn, Variant::Lstm, Variant::CnnLstm, Variant::DilatedCnnLstm];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Cnn => "cnn",
            Variant::Lstm => "lstm",
            Variant::CnnLstm => "cnn_lstm",
            Variant::DilatedCnnLstm => "dilated_cnn_lstm",
        }
    }

    /// Upper-case name used in comparison tables, e.g. `DILATED_CNN-LSTM`.
    pub fn label(self) -> &'static str {
        match self {
            Variant::Cnn => "CNN",
            Variant::Lstm => "LSTM",
            Variant::CnnLstm => "CNN-LSTM",
            Variant::DilatedCnnLstm => "DILATED_CNN-LSTM",
        }
    }

    pub fn has_conv(self) -> bool {
        self != Variant::Lstm
    }

    pub fn has_lstm(self) -> bool {
        self != Variant::Cnn
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown model variant '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Uniform in `±1/√fan_in` from the seeded stream.
    Uniform,
    /// Every parameter zero; the model predicts 0.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub variant: Variant,
    /// Defaults to 2 for `dilated_cnn_lstm` and 1 otherwise.
    pub dilation: Option<usize>,
    /// Defaults to the dilation, which keeps the window's extents.
    pub padding: Option<usize>,
    pub window: usize,
    pub hidden: usize,
    pub channels: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub init: Init,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        ModelConfig {
            variant: Variant::DilatedCnnLstm,
            dilation: None,
            padding: None,
            window: 5,
            hidden: 32,
            channels: 16,
            epochs: 100,
            batch_size: 64,
            learning_rate: adam.learning_rate,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
            seed: 7,
            init: Init::Uniform,
        }
    }
}

impl ModelConfig {
    pub fn dilation(&self) -> usize {
        self.dilation.unwrap_or(match self.variant {
            Variant::DilatedCnnLstm => 2,
            _ => 1,
        })
    }

    pub fn padding(&self) -> usize {
        self.padding.unwrap_or_else(|| self.dilation())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    /// Same settings for another variant, with that variant's default
    /// dilation and padding.
    pub fn for_variant(&self, variant: Variant) -> ModelConfig {
        let keep = variant == self.variant;
        ModelConfig {
            variant,
            dilation: if keep {
                self.dilation
            } else if variant == Variant::DilatedCnnLstm {
                self.dilation.filter(|d| *d >= 2)
            } else {
                None
            },
            padding: if keep { self.padding } else { None },
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dilation();
        match self.variant {
            Variant::DilatedCnnLstm if d < 2 => {
                return Err(Error::Config(format!("dilated_cnn_lstm needs dilation >= 2, got {d}")))
            }
            Variant::CnnLstm | Variant::Cnn if d != 1 => {
                return Err(Error::Config(format!(
                    "{} uses dilation 1, got {d}",
                    self.variant.as_str()
                )))
            }
            _ => {}
        }
        if self.window == 0 || self.hidden == 0 || self.channels == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "window, hidden, channels and batch_size must be >= 1".into(),
            ));
        }
        self.adam().validate()
    }
}

/// Forecaster parameters for one variant. Gradients use the same type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRecord", into = "ModelRecord")]
pub struct Model {
    config: ModelConfig,
    features: usize,
    pub conv: Option<Conv2dLayer>,
    pub lstm: Option<LstmParams>,
    pub dense: Dense,
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct ModelCache {
    conv: Option<(ConvCache, [usize; 3])>,
    lstm: Vec<LstmStepCache>,
    dense_input: Vec<f64>,
}

/// Serialized form: configuration plus named parameter blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelRecord {
    pub config: ModelConfig,
    pub features: usize,
    pub blocks: Vec<ParamBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamBlock {
    pub name: String,
    pub data: Vec<f64>,
}

impl Model {
    /// Parameters for windows of `features` columns, initialized per
    /// `config.init` from `config.seed`.
    pub fn new(config: &ModelConfig, features: usize) -> Result<Self> {
        config.validate()?;
        if features == 0 {
            return Err(Error::Config("model needs at least one input feature".into()));
        }
        let mut rng = Rng::new(config.seed);
        let random = config.init == Init::Uniform;
        let (d, p, c) = (config.dilation(), config.padding(), config.channels);
        let (mut steps, mut width) = (config.window, features);
        let conv = if config.variant.has_conv() {
            let layer = if random {
                Conv2dLayer::random(c, d, p, &mut rng)
            } else {
                Conv2dLayer::zeros(c, d, p)
            };
            let (t2, f2) = layer.output_extent(config.window, features)?;
            steps = t2;
            width = c * f2;
            Some(layer)
        } else {
            None
        };
        let (lstm, dense_in) = if config.variant.has_lstm() {
            let h = config.hidden;
            let l = if random {
                LstmParams::random(h, width, &mut rng)
            } else {
                LstmParams::zeros(h, width)
            };
            (Some(l), h)
        } else {
            (None, steps * width)
        };
        let dense = if random {
            Dense::random(dense_in, &mut rng)
        } else {
            Dense::zeros(dense_in)
        };
        Ok(Model {
            config: config.clone(),
            features,
            conv,
            lstm,
            dense,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn zeros_like(&self) -> Model {
        let mut m = self.clone();
        m.blocks_mut().into_iter().for_each(|(_, b)| b.fill(0.0));
        m
    }

    pub fn blocks(&self) -> Vec<(&'static str, &[f64])> {
        let mut out = Vec::with_capacity(12);
        if let Some(c) = &self.conv {
            out.push(("conv_kernel", c.kernel.data()));
            out.push(("conv_bias", c.bias.as_slice()));
        }
        if let Some(l) = &self.lstm {
            out.extend(l.blocks());
        }
        out.push(("dense_w", self.dense.w.as_slice()));
        out.push(("dense_b", std::slice::from_ref(&self.dense.b)));
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        let mut out = Vec::with_capacity(12);
        if let Some(c) = &mut self.conv {
            out.push(("conv_kernel", c.kernel.data_mut()));
            out.push(("conv_bias", c.bias.as_mut_slice()));
        }
        if let Some(l) = &mut self.lstm {
            out.extend(l.blocks_mut());
        }
        out.push(("dense_w", self.dense.w.as_mut_slice()));
        out.push(("dense_b", std::slice::from_mut(&mut self.dense.b)));
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.blocks().iter().map(|(_, b)| b.len()).sum()
    }

    /// `self += k · other`, block by block.
    pub fn add_scaled(&mut self, other: &Model, k: f64) {
        let src = other.blocks();
        for ((_, dst), (_, s)) in self.blocks_mut().into_iter().zip(src) {
            dst.iter_mut().zip(s).for_each(|(a, b)| *a += k * b);
        }
    }

    pub fn forward(&self, window: &Tensor) -> Result<(f64, ModelCache)> {
        let (t, f) = (self.config.window, self.features);
        if window.shape() != [t, f] {
            return Err(Error::Shape(format!(
                "model expects a {t}x{f} window, got {:?}",
                window.shape()
            )));
        }
        let mut cache = ModelCache {
            conv: None,
            lstm: Vec::new(),
            dense_input: Vec::new(),
        };
        let seq: Vec<Vec<f64>> = match &self.conv {
            Some(conv) => {
                let (out, cc) = conv.forward(window)?;
                let s = out.shape();
                let dims = [s[0], s[1], s[2]];
                cache.conv = Some((cc, dims));
                if self.lstm.is_none() {
                    cache.dense_input = out.into_data();
                    Vec::new()
                } else {
                    let [c, t2, f2] = dims;
                    let d = out.data();
                    (0..t2)
                        .map(|r| {
                            let mut v = Vec::with_capacity(c * f2);
                            for o in 0..c {
                                v.extend_from_slice(&d[(o * t2 + r) * f2..(o * t2 + r + 1) * f2]);
                            }
                            v
                        })
                        .collect()
                }
            }
            None => (0..t).map(|r| window.row(r).to_vec()).collect(),
        };
        if let Some(l) = &self.lstm {
            let (hs, caches) = lstm_forward(l, &seq)?;
            cache.lstm = caches;
            cache.dense_input = hs.into_iter().last().unwrap_or_default();
        }
        let y = self.dense.forward(&cache.dense_input)?;
        Ok((y, cache))
    }

    pub fn predict(&self, window: &Tensor) -> Result<f64> {
        Ok(self.forward(window)?.0)
    }

    /// Parameter gradients for upstream gradient `dy` on the prediction.
    pub fn backward(&self, cache: &ModelCache, dy: f64) -> Result<Model> {
        let mut g = self.zeros_like();
        self.backward_into(cache, dy, &mut g)?;
        Ok(g)
    }

    /// Adds the gradient of `dy · y` into `grad`, a model of the same shape.
    pub fn backward_into(&self, cache: &ModelCache, dy: f64, grad: &mut Model) -> Result<()> {
        let (dw, db, dx) = self.dense.backward(&cache.dense_input, dy)?;
        grad.dense.w.iter_mut().zip(&dw).for_each(|(a, b)| *a += b);
        grad.dense.b += db;
        let conv_grad_out: Option<Vec<f64>> = match &self.lstm {
            Some(l) => {
                let steps = cache.lstm.len();
                let mut gh = vec![vec![0.0; l.hidden()]; steps];
                if let Some(last) = gh.last_mut() {
                    *last = dx;
                }
                let gl = grad
                    .lstm
                    .as_mut()
                    .ok_or_else(|| Error::Shape("missing lstm gradient".into()))?;
                let gx = lstm_backward_into(l, &cache.lstm, &gh, gl)?;
                cache.conv.as_ref().map(|(_, [c, t2, f2])| {
                    let mut flat = vec![0.0; c * t2 * f2];
                    for (r, gr) in gx.iter().enumerate() {
                        for o in 0..*c {
                            flat[(o * t2 + r) * f2..(o * t2 + r + 1) * f2].copy_from_slice(&gr[o * f2..(o + 1) * f2]);
                        }
                    }
                    flat
                })
            }
            None => Some(dx),
        };
        if let (Some(conv), Some((cc, dims)), Some(go)) = (&self.conv, &cache.conv, conv_grad_out) {
            let go = Tensor::new(dims.to_vec(), go)?;
            let cg = conv.backward(cc, &go, false)?;
            let gc = grad
                .conv
                .as_mut()
                .ok_or_else(|| Error::Shape("missing conv gradient".into()))?;
            gc.kernel
                .data_mut()
                .iter_mut()
                .zip(cg.kernel.data())
                .for_each(|(a, b)| *a += b);
            gc.bias.iter_mut().zip(&cg.bias).for_each(|(a, b)| *a += b);
        }
        Ok(())
    }

    pub fn to_record(&self) -> ModelRecord {
        ModelRecord {
            config: self.config.clone(),
            features: self.features,
            blocks: self
                .blocks()
                .into_iter()
                .map(|(n, d)| ParamBlock {
                    name: n.to_string(),
                    data: d.to_vec(),
                })
                .collect(),
        }
    }

    pub fn from_record(rec: ModelRecord) -> Result<Model> {
        let config = ModelConfig {
            init: Init::Zero,
            ..rec.config.clone()
        };
        let mut model = Model::new(&config, rec.features).map_err(|e| Error::Checkpoint(e.to_string()))?;
        model.config = rec.config;
        let mut slots = model.blocks_mut();
        if slots.len() != rec.blocks.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} parameter blocks, found {}",
                slots.len(),
                rec.blocks.len()
            )));
        }
        for ((name, dst), src) in slots.iter_mut().zip(&rec.blocks) {
            if *name != src.name || dst.len() != src.data.len() {
                return Err(Error::Checkpoint(format!(
                    "block '{}' ({} values) does not match expected '{name}' ({} values)",
                    src.name,
                    src.data.len(),
                    dst.len()
                )));
            }
            if src.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::Checkpoint(format!("block '{name}' holds non-finite values")));
            }
            dst.copy_from_slice(&src.data);
        }
        Ok(model)
    }
}

impl From<Model> for ModelRecord {
    fn from(m: Model) -> Self {
        m.to_record()
    }
}

impl TryFrom<ModelRecord> for Model {
    type Error = Error;

    fn try_from(r: ModelRecord) -> Result<Self> {
        Model::from_record(r)
    }
}
