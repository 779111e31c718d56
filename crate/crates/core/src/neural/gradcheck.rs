//! Central finite-difference checks of every analytic gradient.

use serde::Serialize;

use super::conv::Conv2dLayer;
use super::dense::{mse_loss, Dense};
use super::lstm::{lstm_backward, lstm_forward, LstmParams};
use super::model::{Model, ModelConfig, Variant};
use crate::error::Result;
use crate::numcore::{Rng, Tensor};

#[derive(Debug, Clone)]
pub struct GradcheckOptions {
    pub step: f64,
    pub tolerance: f64,
    /// Random instances per layer.
    pub instances: usize,
    pub seed: u64,
    /// Block whose analytic gradient is deliberately perturbed, to prove
    /// the check can fail. Matches `name` or `group/name`.
    pub corrupt: Option<String>,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        GradcheckOptions {
            step: 1e-5,
            tolerance: 1e-4,
            instances: 10,
            seed: 2021,
            corrupt: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockCheck {
    pub group: String,
    pub block: String,
    pub max_rel_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub tolerance: f64,
    pub checks: Vec<BlockCheck>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&BlockCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Magnitudes below this are compared absolutely rather than relatively.
const REL_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Central differences of `loss` with respect to every entry of block `b`.
fn numeric<P: Clone>(
    p: &P,
    b: usize,
    h: f64,
    blocks: &dyn Fn(&mut P) -> Vec<&mut [f64]>,
    loss: &dyn Fn(&P) -> Result<f64>,
) -> Result<Vec<f64>> {
    let mut work = p.clone();
    let n = blocks(&mut work)[b].len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let orig = blocks(&mut work)[b][k];
        blocks(&mut work)[b][k] = orig + h;
        let up = loss(&work)?;
        blocks(&mut work)[b][k] = orig - h;
        let down = loss(&work)?;
        blocks(&mut work)[b][k] = orig;
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

struct Tally<'a> {
    opts: &'a GradcheckOptions,
    worst: Vec<(String, String, f64)>,
}

impl Tally<'_> {
    fn record(&mut self, group: &str, block: &str, mut analytic: Vec<f64>, numeric: &[f64]) {
        if let Some(target) = &self.opts.corrupt {
            if target == block || *target == format!("{group}/{block}") {
                if let Some(a) = analytic.first_mut() {
                    *a = *a * 1.1 + 1e-3;
                }
            }
        }
        let err = analytic
            .iter()
            .zip(numeric)
            .map(|(a, n)| relative_error(*a, *n))
            .fold(0.0, f64::max);
        match self.worst.iter_mut().find(|(g, b, _)| g == group && b == block) {
            Some(slot) => slot.2 = slot.2.max(err),
            None => self.worst.push((group.into(), block.into(), err)),
        }
    }

    fn compare<P: Clone>(
        &mut self,
        group: &str,
        names: &[&str],
        analytic: Vec<Vec<f64>>,
        p: &P,
        blocks: &dyn Fn(&mut P) -> Vec<&mut [f64]>,
        loss: &dyn Fn(&P) -> Result<f64>,
    ) -> Result<()> {
        for (b, (name, a)) in names.iter().zip(analytic).enumerate() {
            let n = numeric(p, b, self.opts.step, blocks, loss)?;
            self.record(group, name, a, &n);
        }
        Ok(())
    }
}

fn randn(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.standard_normal()).collect()
}

fn check_conv(t: &mut Tally, rng: &mut Rng, instance: usize) -> Result<()> {
    let d = 1 + instance % 4;
    let layer = Conv2dLayer::random(2, d, d, rng);
    let input = Tensor::matrix(6, 6, randn(rng, 36))?;
    let r = randn(rng, 2 * 36);
    let (_, cache) = layer.forward(&input)?;
    let g = layer.backward(&cache, &Tensor::new(vec![2, 6, 6], r.clone())?, true)?;
    let analytic = vec![
        g.kernel.into_data(),
        g.bias,
        g.input.map(Tensor::into_data).unwrap_or_default(),
    ];
    fn blocks(p: &mut (Conv2dLayer, Tensor)) -> Vec<&mut [f64]> {
        let (l, x) = p;
        vec![l.kernel.data_mut(), l.bias.as_mut_slice(), x.data_mut()]
    }
    let loss = |p: &(Conv2dLayer, Tensor)| -> Result<f64> {
        let (y, _) = p.0.forward(&p.1)?;
        Ok(y.data().iter().zip(&r).map(|(a, b)| a * b).sum())
    };
    t.compare(
        "conv",
        &["conv_kernel", "conv_bias", "conv_input"],
        analytic,
        &(layer, input),
        &blocks,
        &loss,
    )
}

fn check_lstm(t: &mut Tally, rng: &mut Rng) -> Result<()> {
    let (hidden, input, steps) = (4, 3, 5);
    let params = LstmParams::random(hidden, input, rng);
    let xs = randn(rng, steps * input);
    let r: Vec<Vec<f64>> = (0..steps).map(|_| randn(rng, hidden)).collect();
    let seq = |flat: &[f64]| flat.chunks(input).map(<[f64]>::to_vec).collect::<Vec<_>>();
    let (_, caches) = lstm_forward(&params, &seq(&xs))?;
    let (g, gx) = lstm_backward(&params, &caches, &r)?;
    let mut analytic: Vec<Vec<f64>> = g.blocks().iter().map(|(_, b)| b.to_vec()).collect();
    analytic.push(gx.concat());
    let names: Vec<&str> = g.blocks().iter().map(|(n, _)| *n).chain(["lstm_input"]).collect();
    fn blocks(p: &mut (LstmParams, Vec<f64>)) -> Vec<&mut [f64]> {
        let (l, x) = p;
        let mut v: Vec<&mut [f64]> = l.blocks_mut().into_iter().map(|(_, b)| b).collect();
        v.push(x.as_mut_slice());
        v
    }
    let loss = |p: &(LstmParams, Vec<f64>)| -> Result<f64> {
        let (hs, _) = lstm_forward(&p.0, &seq(&p.1))?;
        Ok(hs
            .iter()
            .zip(&r)
            .map(|(h, w)| h.iter().zip(w).map(|(a, b)| a * b).sum::<f64>())
            .sum())
    };
    t.compare("lstm", &names, analytic, &(params, xs), &blocks, &loss)
}

fn check_dense(t: &mut Tally, rng: &mut Rng) -> Result<()> {
    let layer = Dense::random(5, rng);
    let x = randn(rng, 5);
    let r = rng.standard_normal();
    let (dw, db, dx) = layer.backward(&x, r)?;
    fn blocks(p: &mut (Dense, Vec<f64>)) -> Vec<&mut [f64]> {
        let (l, x) = p;
        vec![l.w.as_mut_slice(), std::slice::from_mut(&mut l.b), x.as_mut_slice()]
    }
    let loss = |p: &(Dense, Vec<f64>)| -> Result<f64> { Ok(r * p.0.forward(&p.1)?) };
    t.compare(
        "dense",
        &["dense_w", "dense_b", "dense_input"],
        vec![dw, vec![db], dx],
        &(layer, x),
        &blocks,
        &loss,
    )
}

/// Tiny model (T=5, F=3, hidden 4, 2 channels) against an MSE loss.
fn check_model(t: &mut Tally, rng: &mut Rng, variant: Variant) -> Result<()> {
    let cfg = ModelConfig {
        hidden: 4,
        channels: 2,
        seed: rng.next_u64(),
        ..ModelConfig::default().for_variant(variant)
    };
    let model = Model::new(&cfg, 3)?;
    let window = Tensor::matrix(5, 3, randn(rng, 15))?;
    let target = rng.standard_normal();
    let (y, cache) = model.forward(&window)?;
    let (_, dy) = mse_loss(&[y], &[target])?;
    let g = model.backward(&cache, dy[0])?;
    let names: Vec<&str> = g.blocks().iter().map(|(n, _)| *n).collect();
    let analytic: Vec<Vec<f64>> = g.blocks().iter().map(|(_, b)| b.to_vec()).collect();
    fn blocks(m: &mut Model) -> Vec<&mut [f64]> {
        m.blocks_mut().into_iter().map(|(_, b)| b).collect()
    }
    let loss = |m: &Model| -> Result<f64> { Ok(mse_loss(&[m.predict(&window)?], &[target])?.0) };
    let group = format!("model:{}", variant.as_str());
    t.compare(&group, &names, analytic, &model, &blocks, &loss)
}

/// Runs every layer check on `instances` random draws and the end-to-end
/// check for each model variant, reporting the worst error per block.
pub fn run_gradcheck(opts: &GradcheckOptions) -> Result<GradcheckReport> {
    let mut rng = Rng::new(opts.seed);
    let mut tally = Tally {
        opts,
        worst: Vec::new(),
    };
    for i in 0..opts.instances.max(1) {
        check_conv(&mut tally, &mut rng, i)?;
        check_lstm(&mut tally, &mut rng)?;
        check_dense(&mut tally, &mut rng)?;
        for v in [Variant::DilatedCnnLstm, Variant::CnnLstm, Variant::Lstm, Variant::Cnn] {
            check_model(&mut tally, &mut rng, v)?;
        }
    }
    Ok(GradcheckReport {
        tolerance: opts.tolerance,
        checks: tally
            .worst
            .into_iter()
            .map(|(group, block, e)| BlockCheck {
                passed: e <= opts.tolerance,
                group,
                block,
                max_rel_error: e,
            })
            .collect(),
    })
}
