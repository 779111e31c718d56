use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::{Rng, Tensor};

pub const KERNEL: usize = 3;

/// Span of input positions seen by one output of a `kernel`-wide
/// convolution with the given dilation: `d·(k−1)+1`.
pub fn receptive_field(kernel: usize, dilation: usize) -> Result<usize> {
    if dilation < 1 || kernel < 1 {
        return Err(Error::Parameter(format!(
            "kernel and dilation must be >= 1, got kernel {kernel}, dilation {dilation}"
        )));
    }
    Ok(dilation * (kernel - 1) + 1)
}

/// Single-input-channel 3×3 convolution, stride 1, zero padding. Linear:
/// no activation is applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conv2dLayer {
    /// `[out_channels, 3, 3]`.
    pub kernel: Tensor,
    pub bias: Vec<f64>,
    pub dilation: usize,
    pub padding: usize,
}

#[derive(Debug, Clone)]
pub struct ConvCache {
    input: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrads {
    pub input: Option<Tensor>,
    pub kernel: Tensor,
    pub bias: Vec<f64>,
}

impl Conv2dLayer {
    pub fn zeros(channels: usize, dilation: usize, padding: usize) -> Self {
        Conv2dLayer {
            kernel: Tensor::zeros(&[channels, KERNEL, KERNEL]),
            bias: vec![0.0; channels],
            dilation,
            padding,
        }
    }

    /// Kernel and bias uniform in `±1/√9`.
    pub fn random(channels: usize, dilation: usize, padding: usize, rng: &mut Rng) -> Self {
        let mut layer = Self::zeros(channels, dilation, padding);
        let bound = 1.0 / ((KERNEL * KERNEL) as f64).sqrt();
        layer
            .kernel
            .data_mut()
            .iter_mut()
            .for_each(|w| *w = rng.uniform(-bound, bound));
        layer.bias.iter_mut().for_each(|b| *b = rng.uniform(-bound, bound));
        layer
    }

    pub fn channels(&self) -> usize {
        self.bias.len()
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.bias.len();
        if c == 0 || self.kernel.shape() != [c, KERNEL, KERNEL] {
            return Err(Error::Shape(format!(
                "kernel shape {:?} does not match {c} output channels",
                self.kernel.shape()
            )));
        }
        receptive_field(KERNEL, self.dilation)?;
        Ok(())
    }

    pub fn output_extent(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let span = receptive_field(KERNEL, self.dilation)?;
        let (ph, pw) = (h + 2 * self.padding, w + 2 * self.padding);
        if ph < span || pw < span {
            return Err(Error::Shape(format!(
                "input {h}x{w} with padding {} is smaller than the {span}x{span} dilated kernel",
                self.padding
            )));
        }
        Ok((ph - span + 1, pw - span + 1))
    }

    /// Input `[H, W]` (one channel) to output `[C, H', W']`.
    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, ConvCache)> {
        let (h, w) = match input.shape() {
            [h, w] => (*h, *w),
            [1, h, w] => (*h, *w),
            s => return Err(Error::Shape(format!("conv input must be HxW or 1xHxW, got {s:?}"))),
        };
        let (oh, ow) = self.output_extent(h, w)?;
        let c = self.channels();
        let (d, p) = (self.dilation as isize, self.padding as isize);
        let x = input.data();
        let k = self.kernel.data();
        let mut out = vec![0.0; c * oh * ow];
        for o in 0..c {
            let plane = &mut out[o * oh * ow..(o + 1) * oh * ow];
            plane.iter_mut().for_each(|v| *v = self.bias[o]);
            for u in 0..KERNEL {
                for v in 0..KERNEL {
                    let kw = k[(o * KERNEL + u) * KERNEL + v];
                    if kw == 0.0 {
                        continue;
                    }
                    for y in 0..oh {
                        let iy = y as isize - p + d * u as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let row = &x[iy as usize * w..(iy as usize + 1) * w];
                        let orow = &mut plane[y * ow..(y + 1) * ow];
                        for (xo, slot) in orow.iter_mut().enumerate() {
                            let ix = xo as isize - p + d * v as isize;
                            if ix >= 0 && ix < w as isize {
                                *slot += kw * row[ix as usize];
                            }
                        }
                    }
                }
            }
        }
        let input = Tensor::matrix(h, w, x.to_vec())?;
        Ok((Tensor::new(vec![c, oh, ow], out)?, ConvCache { input }))
    }

    /// Gradients of a scalar loss given `grad_out` shaped like the forward
    /// output. The input gradient is skipped unless `want_input`.
    pub fn backward(&self, cache: &ConvCache, grad_out: &Tensor, want_input: bool) -> Result<ConvGrads> {
        let (h, w) = (cache.input.rows(), cache.input.cols());
        let (oh, ow) = self.output_extent(h, w)?;
        let c = self.channels();
        if grad_out.shape() != [c, oh, ow] {
            return Err(Error::Shape(format!(
                "conv grad_out {:?} does not match output [{c}, {oh}, {ow}]",
                grad_out.shape()
            )));
        }
        let (d, p) = (self.dilation as isize, self.padding as isize);
        let x = cache.input.data();
        let g = grad_out.data();
        let k = self.kernel.data();
        let mut gk = vec![0.0; c * KERNEL * KERNEL];
        let mut gb = vec![0.0; c];
        let mut gx = if want_input { vec![0.0; h * w] } else { Vec::new() };
        for o in 0..c {
            let plane = &g[o * oh * ow..(o + 1) * oh * ow];
            gb[o] = plane.iter().sum();
            for u in 0..KERNEL {
                for v in 0..KERNEL {
                    let ki = (o * KERNEL + u) * KERNEL + v;
                    let mut acc = 0.0;
                    for y in 0..oh {
                        let iy = y as isize - p + d * u as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let base = iy as usize * w;
                        for xo in 0..ow {
                            let ix = xo as isize - p + d * v as isize;
                            if ix >= 0 && ix < w as isize {
                                let go = plane[y * ow + xo];
                                acc += go * x[base + ix as usize];
                                if want_input {
                                    gx[base + ix as usize] += go * k[ki];
                                }
                            }
                        }
                    }
                    gk[ki] = acc;
                }
            }
        }
        Ok(ConvGrads {
            input: if want_input {
                Some(Tensor::matrix(h, w, gx)?)
            } else {
                None
            },
            kernel: Tensor::new(vec![c, KERNEL, KERNEL], gk)?,
            bias: gb,
        })
    }
}

pub fn conv2d_forward(layer: &Conv2dLayer, input: &Tensor) -> Result<(Tensor, ConvCache)> {
    layer.forward(input)
}

pub fn conv2d_backward(layer: &Conv2dLayer, cache: &ConvCache, grad_out: &Tensor) -> Result<ConvGrads> {
    layer.backward(cache, grad_out, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones_kernel(c: usize) -> Conv2dLayer {
        let mut l = Conv2dLayer::zeros(c, 1, 1);
        l.kernel.data_mut().iter_mut().for_each(|w| *w = 1.0);
        l
    }

    fn delta(c: usize, d: usize) -> Conv2dLayer {
        let mut l = Conv2dLayer::zeros(c, d, d);
        for o in 0..c {
            l.kernel.data_mut()[o * 9 + 4] = 1.0;
        }
        l
    }

    #[test]
    fn receptive_fields() {
        let r: Vec<usize> = (1..=4).map(|d| receptive_field(3, d).unwrap()).collect();
        assert_eq!(r, vec![3, 5, 7, 9]);
        assert!(receptive_field(3, 0).is_err());
    }

    #[test]
    fn all_ones_counts_taps() {
        let x = Tensor::matrix(5, 5, vec![1.0; 25]).unwrap();
        let (y, _) = ones_kernel(1).forward(&x).unwrap();
        assert_eq!(y.shape(), &[1, 5, 5]);
        let at = |r: usize, c: usize| y.data()[r * 5 + c];
        assert_eq!(at(2, 2), 9.0);
        assert_eq!(at(0, 2), 6.0);
        assert_eq!(at(2, 4), 6.0);
        assert_eq!(at(0, 0), 4.0);
        assert_eq!(at(4, 4), 4.0);
    }

    #[test]
    fn delta_kernel_is_identity_for_every_dilation() {
        let mut rng = Rng::new(3);
        let x = Tensor::matrix(5, 7, (0..35).map(|_| rng.standard_normal()).collect()).unwrap();
        for d in 1..=4 {
            let (y, _) = delta(2, d).forward(&x).unwrap();
            assert_eq!(y.shape(), &[2, 5, 7]);
            assert_eq!(&y.data()[..35], x.data());
            assert_eq!(&y.data()[35..], x.data());
        }
    }

    #[test]
    fn zero_input_gives_bias() {
        let mut l = Conv2dLayer::random(3, 2, 2, &mut Rng::new(1));
        l.bias = vec![0.5, -1.0, 2.0];
        let (y, _) = l.forward(&Tensor::zeros(&[4, 4])).unwrap();
        for o in 0..3 {
            assert!(y.data()[o * 16..(o + 1) * 16].iter().all(|v| *v == l.bias[o]));
        }
    }

    #[test]
    fn too_small_without_padding() {
        let l = Conv2dLayer::zeros(1, 2, 0);
        assert!(l.forward(&Tensor::zeros(&[4, 9])).is_err());
        assert_eq!(l.forward(&Tensor::zeros(&[5, 9])).unwrap().0.shape(), &[1, 1, 5]);
    }

    #[test]
    fn single_pixel_gradient() {
        let l = Conv2dLayer::zeros(1, 1, 1);
        let x = Tensor::matrix(1, 1, vec![2.5]).unwrap();
        let (_, cache) = l.forward(&x).unwrap();
        let g = Tensor::new(vec![1, 1, 1], vec![-3.0]).unwrap();
        let grads = conv2d_backward(&l, &cache, &g).unwrap();
        assert_eq!(grads.kernel.data()[4], 2.5 * -3.0);
        assert_eq!(grads.bias, vec![-3.0]);
        let zero = conv2d_backward(&l, &cache, &Tensor::zeros(&[1, 1, 1])).unwrap();
        assert!(zero.kernel.data().iter().all(|v| *v == 0.0));
    }

    /// Straightforward convolution with explicit zero padding.
    fn reference(l: &Conv2dLayer, x: &Tensor) -> Vec<f64> {
        let (h, w) = (x.rows(), x.cols());
        let p = l.padding;
        let (ph, pw) = (h + 2 * p, w + 2 * p);
        let mut padded = vec![0.0; ph * pw];
        for r in 0..h {
            for c in 0..w {
                padded[(r + p) * pw + c + p] = x.data()[r * w + c];
            }
        }
        let (oh, ow) = (ph - 2, pw - 2);
        let mut out = Vec::new();
        for o in 0..l.channels() {
            for r in 0..oh {
                for c in 0..ow {
                    let mut s = l.bias[o];
                    for u in 0..3 {
                        for v in 0..3 {
                            s += l.kernel.data()[o * 9 + u * 3 + v] * padded[(r + u) * pw + c + v];
                        }
                    }
                    out.push(s);
                }
            }
        }
        out
    }

    #[test]
    fn matches_reference_at_unit_dilation() {
        let mut rng = Rng::new(11);
        for _ in 0..10 {
            let l = Conv2dLayer::random(4, 1, 1, &mut rng);
            let x = Tensor::matrix(6, 7, (0..42).map(|_| rng.standard_normal()).collect()).unwrap();
            let (y, _) = l.forward(&x).unwrap();
            for (a, b) in y.data().iter().zip(reference(&l, &x)) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
