use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::{Rng, Tensor};

/// One LSTM layer. Each gate matrix is `hidden × (hidden + input)` and acts
/// on the concatenation `[h_{t−1}, x_t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub w_f: Tensor,
    pub w_i: Tensor,
    pub w_g: Tensor,
    pub w_o: Tensor,
    pub b_f: Vec<f64>,
    pub b_i: Vec<f64>,
    pub b_g: Vec<f64>,
    pub b_o: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        LstmState {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

/// Everything one step needs for backpropagation.
#[derive(Debug, Clone)]
pub struct LstmStepCache {
    /// `[h_{t−1}, x_t]`.
    pub concat: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    pub z: Vec<f64>,
    pub o: Vec<f64>,
    pub tanh_c: Vec<f64>,
}

pub type LstmGrads = LstmParams;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Dot product over four interleaved partial sums, so it vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

impl LstmParams {
    pub fn zeros(hidden: usize, input: usize) -> Self {
        let w = || Tensor::zeros(&[hidden, hidden + input]);
        LstmParams {
            w_f: w(),
            w_i: w(),
            w_g: w(),
            w_o: w(),
            b_f: vec![0.0; hidden],
            b_i: vec![0.0; hidden],
            b_g: vec![0.0; hidden],
            b_o: vec![0.0; hidden],
        }
    }

    /// Every weight and bias uniform in `±1/√(hidden + input)`.
    pub fn random(hidden: usize, input: usize, rng: &mut Rng) -> Self {
        let mut p = Self::zeros(hidden, input);
        let bound = 1.0 / ((hidden + input) as f64).sqrt();
        for block in p.blocks_mut() {
            block.1.iter_mut().for_each(|v| *v = rng.uniform(-bound, bound));
        }
        p
    }

    pub fn hidden(&self) -> usize {
        self.b_f.len()
    }

    pub fn input(&self) -> usize {
        self.w_f
            .shape()
            .get(1)
            .copied()
            .unwrap_or(0)
            .saturating_sub(self.hidden())
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.hidden();
        let shape = self.w_f.shape().to_vec();
        if h == 0 || shape.len() != 2 || shape[0] != h || shape[1] <= h {
            return Err(Error::Shape(format!(
                "W_f shape {shape:?} does not fit hidden size {h}"
            )));
        }
        for (name, w) in [("W_i", &self.w_i), ("W_g", &self.w_g), ("W_o", &self.w_o)] {
            if w.shape() != shape.as_slice() {
                return Err(Error::Shape(format!(
                    "{name} shape {:?} differs from W_f {shape:?}",
                    w.shape()
                )));
            }
        }
        for (name, b) in [("b_i", &self.b_i), ("b_g", &self.b_g), ("b_o", &self.b_o)] {
            if b.len() != h {
                return Err(Error::Shape(format!(
                    "{name} has {} entries, hidden size is {h}",
                    b.len()
                )));
            }
        }
        Ok(())
    }

    pub fn blocks(&self) -> [(&'static str, &[f64]); 8] {
        [
            ("W_f", self.w_f.data()),
            ("W_i", self.w_i.data()),
            ("W_g", self.w_g.data()),
            ("W_o", self.w_o.data()),
            ("b_f", &self.b_f),
            ("b_i", &self.b_i),
            ("b_g", &self.b_g),
            ("b_o", &self.b_o),
        ]
    }

    pub fn blocks_mut(&mut self) -> [(&'static str, &mut [f64]); 8] {
        [
            ("W_f", self.w_f.data_mut()),
            ("W_i", self.w_i.data_mut()),
            ("W_g", self.w_g.data_mut()),
            ("W_o", self.w_o.data_mut()),
            ("b_f", &mut self.b_f),
            ("b_i", &mut self.b_i),
            ("b_g", &mut self.b_g),
            ("b_o", &mut self.b_o),
        ]
    }
}

pub fn lstm_step(params: &LstmParams, x: &[f64], prev: &LstmState) -> Result<(LstmState, LstmStepCache)> {
    check_step(params, x, prev)?;
    let xpart = input_parts(params, std::slice::from_ref(&x.to_vec()));
    Ok(step_with(params, x, prev, &xpart, 0))
}

fn check_step(params: &LstmParams, x: &[f64], prev: &LstmState) -> Result<()> {
    let h = params.hidden();
    if x.len() != params.input() || prev.h.len() != h || prev.c.len() != h {
        return Err(Error::Shape(format!(
            "lstm step expects input {} and state {h}, got input {} and state {}/{}",
            params.input(),
            x.len(),
            prev.h.len(),
            prev.c.len()
        )));
    }
    Ok(())
}

fn gate_weights(params: &LstmParams) -> [(&Tensor, &[f64]); 4] {
    [
        (&params.w_f, &params.b_f),
        (&params.w_i, &params.b_i),
        (&params.w_g, &params.b_g),
        (&params.w_o, &params.b_o),
    ]
}

/// `b + W[:, h..]·x_t` for every gate and step, laid out `[gate][step·h + k]`.
/// Each weight row is read once for the whole sequence.
fn input_parts(params: &LstmParams, xs: &[Vec<f64>]) -> [Vec<f64>; 4] {
    let h = params.hidden();
    let cols = h + params.input();
    gate_weights(params).map(|(w, b)| {
        let mut out = vec![0.0; xs.len() * h];
        for k in 0..h {
            let row = &w.data()[k * cols + h..(k + 1) * cols];
            for (t, x) in xs.iter().enumerate() {
                out[t * h + k] = b[k] + dot(row, x);
            }
        }
        out
    })
}

fn step_with(
    params: &LstmParams,
    x: &[f64],
    prev: &LstmState,
    xpart: &[Vec<f64>; 4],
    t: usize,
) -> (LstmState, LstmStepCache) {
    let h = params.hidden();
    let cols = h + x.len();
    let mut concat = Vec::with_capacity(cols);
    concat.extend_from_slice(&prev.h);
    concat.extend_from_slice(x);
    let [mut f, mut i, mut z, mut o] = gate_weights(params).map(|_| vec![0.0; h]);
    for (q, (out, (w, _))) in [&mut f, &mut i, &mut z, &mut o]
        .into_iter()
        .zip(gate_weights(params))
        .enumerate()
    {
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = xpart[q][t * h + k] + dot(&w.data()[k * cols..k * cols + h], &prev.h);
        }
    }
    f.iter_mut().for_each(|v| *v = sigmoid(*v));
    i.iter_mut().for_each(|v| *v = sigmoid(*v));
    z.iter_mut().for_each(|v| *v = v.tanh());
    o.iter_mut().for_each(|v| *v = sigmoid(*v));
    let c: Vec<f64> = (0..h).map(|k| f[k] * prev.c[k] + i[k] * z[k]).collect();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let hn: Vec<f64> = (0..h).map(|k| o[k] * tanh_c[k]).collect();
    let cache = LstmStepCache {
        concat,
        c_prev: prev.c.clone(),
        f,
        i,
        z,
        o,
        tanh_c,
    };
    (LstmState { h: hn, c }, cache)
}

/// Runs the sequence from a zero state; returns every hidden state.
pub fn lstm_forward(params: &LstmParams, xs: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Vec<LstmStepCache>)> {
    let mut state = LstmState::zeros(params.hidden());
    for x in xs {
        check_step(params, x, &state)?;
    }
    let xpart = input_parts(params, xs);
    let mut hs = Vec::with_capacity(xs.len());
    let mut caches = Vec::with_capacity(xs.len());
    for (t, x) in xs.iter().enumerate() {
        let (next, cache) = step_with(params, x, &state, &xpart, t);
        hs.push(next.h.clone());
        caches.push(cache);
        state = next;
    }
    Ok((hs, caches))
}

/// Backpropagation through time. `grad_h[t]` is the loss gradient arriving
/// at `h_t` from outside the recurrence (usually zero except at the last
/// step). Returns parameter gradients and the gradient for each `x_t`.
pub fn lstm_backward(
    params: &LstmParams,
    caches: &[LstmStepCache],
    grad_h: &[Vec<f64>],
) -> Result<(LstmGrads, Vec<Vec<f64>>)> {
    let mut grads = LstmParams::zeros(params.hidden(), params.input());
    let grad_x = lstm_backward_into(params, caches, grad_h, &mut grads)?;
    Ok((grads, grad_x))
}

/// As [`lstm_backward`], but adds the parameter gradients into `grads`.
pub fn lstm_backward_into(
    params: &LstmParams,
    caches: &[LstmStepCache],
    grad_h: &[Vec<f64>],
    grads: &mut LstmGrads,
) -> Result<Vec<Vec<f64>>> {
    let h = params.hidden();
    let n_in = params.input();
    if grad_h.len() != caches.len() || grad_h.iter().any(|g| g.len() != h) {
        return Err(Error::Shape(format!(
            "lstm backward needs {} gradients of length {h}",
            caches.len()
        )));
    }
    if grads.hidden() != h || grads.input() != n_in {
        return Err(Error::Shape("gradient accumulator does not match parameters".into()));
    }
    let cols = h + n_in;
    let steps = caches.len();
    if caches.iter().any(|c| c.concat.len() != cols) {
        return Err(Error::Shape("cached step does not match parameters".into()));
    }
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    // gate pre-activation gradients, `[gate][step·h + k]`
    let mut gates = [
        vec![0.0; steps * h],
        vec![0.0; steps * h],
        vec![0.0; steps * h],
        vec![0.0; steps * h],
    ];
    let weights = [&params.w_f, &params.w_i, &params.w_g, &params.w_o];
    for t in (0..steps).rev() {
        let cc = &caches[t];
        for k in 0..h {
            let dh = grad_h[t][k] + dh_next[k];
            let dc = dh * cc.o[k] * (1.0 - cc.tanh_c[k] * cc.tanh_c[k]) + dc_next[k];
            gates[0][t * h + k] = dc * cc.c_prev[k] * cc.f[k] * (1.0 - cc.f[k]);
            gates[1][t * h + k] = dc * cc.z[k] * cc.i[k] * (1.0 - cc.i[k]);
            gates[2][t * h + k] = dc * cc.i[k] * (1.0 - cc.z[k] * cc.z[k]);
            gates[3][t * h + k] = dh * cc.tanh_c[k] * cc.o[k] * (1.0 - cc.o[k]);
            dc_next[k] = dc * cc.f[k];
        }
        // only the recurrent block is needed inside the time loop
        dh_next.fill(0.0);
        for (q, w) in weights.iter().enumerate() {
            for k in 0..h {
                let d = gates[q][t * h + k];
                if d != 0.0 {
                    for (acc, w) in dh_next.iter_mut().zip(&w.data()[k * cols..k * cols + h]) {
                        *acc += d * w;
                    }
                }
            }
        }
    }
    // one pass over every weight row for all steps
    let mut grad_x = vec![vec![0.0; n_in]; steps];
    let [gwf, gwi, gwg, gwo, gbf, gbi, gbg, gbo] = grads.blocks_mut();
    let gw = [gwf.1, gwi.1, gwg.1, gwo.1];
    let gb = [gbf.1, gbi.1, gbg.1, gbo.1];
    for (q, (gw, gb)) in gw.into_iter().zip(gb).enumerate() {
        let w = weights[q].data();
        for k in 0..h {
            let grow = &mut gw[k * cols..(k + 1) * cols];
            let wx = &w[k * cols + h..(k + 1) * cols];
            for (t, cc) in caches.iter().enumerate() {
                let d = gates[q][t * h + k];
                if d == 0.0 {
                    continue;
                }
                gb[k] += d;
                for (g, x) in grow.iter_mut().zip(&cc.concat) {
                    *g += d * x;
                }
                for (acc, w) in grad_x[t].iter_mut().zip(wx) {
                    *acc += d * w;
                }
            }
        }
    }
    Ok(grad_x)
}
