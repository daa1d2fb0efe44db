//! Conv1d(ReLU) -> MaxPool -> Flatten -> Dense(ReLU) -> Dense(softmax).

use super::layers::{affine, conv1d_pre, softmax};
use super::net::CnnSpec;
use super::params::{ParamBuffer, ParamSet};
use crate::error::{Error, Result};
use crate::numeric::RngStream;

const CONV_W: usize = 0;
const CONV_B: usize = 1;
const DENSE_W: usize = 2;
const DENSE_B: usize = 3;
const OUT_W: usize = 4;
const OUT_B: usize = 5;

#[derive(Clone, Copy, Debug)]
pub(crate) struct CnnDims {
    input_len: usize,
    filters: usize,
    kernel: usize,
    pool: usize,
    conv_len: usize,
    pooled_len: usize,
    dense: usize,
    classes: usize,
}

impl CnnDims {
    pub(crate) fn new(spec: &CnnSpec, input_len: usize) -> Result<Self> {
        if input_len < spec.kernel_size {
            return Err(Error::shape(format!(
                "{input_len} features cannot fit kernel size {}",
                spec.kernel_size
            )));
        }
        let conv_len = input_len + 1 - spec.kernel_size;
        if conv_len < spec.pool_size {
            return Err(Error::shape(format!(
                "conv output length {conv_len} shorter than pool size {}",
                spec.pool_size
            )));
        }
        Ok(CnnDims {
            input_len,
            filters: spec.conv_filters,
            kernel: spec.kernel_size,
            pool: spec.pool_size,
            conv_len,
            pooled_len: conv_len / spec.pool_size,
            dense: spec.dense_units,
            classes: spec.output_classes,
        })
    }

    fn flat(&self) -> usize {
        self.filters * self.pooled_len
    }

    pub(crate) fn input_len(&self) -> usize {
        self.input_len
    }

    pub(crate) fn init(&self, rng: &mut RngStream) -> ParamSet {
        let (f, k, u, c) = (self.filters, self.kernel, self.dense, self.classes);
        ParamSet {
            buffers: vec![
                ParamBuffer::glorot("conv.weight", &[f, k], k, f * k, rng),
                ParamBuffer::zeros("conv.bias", &[f]),
                ParamBuffer::glorot("dense.weight", &[u, self.flat()], self.flat(), u, rng),
                ParamBuffer::zeros("dense.bias", &[u]),
                ParamBuffer::glorot("out.weight", &[c, u], u, c, rng),
                ParamBuffer::zeros("out.bias", &[c]),
            ],
        }
    }

    pub(crate) fn check_layout(&self, params: &ParamSet) -> Result<()> {
        let mut rng = RngStream::new(0);
        self.init(&mut rng).same_layout(params)
    }
}

pub(crate) struct CnnCache {
    conv_pre: Vec<f64>,
    argmax: Vec<usize>,
    flat: Vec<f64>,
    hidden_pre: Vec<f64>,
    hidden: Vec<f64>,
    pub(crate) probs: Vec<f64>,
}

fn ensure_finite(values: &[f64], layer: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::numeric(layer, "non-finite activation"))
    }
}

pub(crate) fn forward(dims: &CnnDims, params: &ParamSet, x: &[f64]) -> Result<CnnCache> {
    let p = &params.buffers;
    let mut conv_pre = vec![0.0; dims.filters * dims.conv_len];
    conv1d_pre(
        x,
        &p[CONV_W].data,
        &p[CONV_B].data,
        dims.kernel,
        &mut conv_pre,
    );
    ensure_finite(&conv_pre, "cnn.conv")?;

    let mut flat = vec![0.0; dims.flat()];
    let mut argmax = vec![0; dims.flat()];
    for f in 0..dims.filters {
        let row = &conv_pre[f * dims.conv_len..(f + 1) * dims.conv_len];
        for j in 0..dims.pooled_len {
            let start = j * dims.pool;
            let mut best = start;
            for t in start + 1..start + dims.pool {
                if row[t].max(0.0) > row[best].max(0.0) {
                    best = t;
                }
            }
            flat[f * dims.pooled_len + j] = row[best].max(0.0);
            argmax[f * dims.pooled_len + j] = best;
        }
    }

    let mut hidden_pre = vec![0.0; dims.dense];
    affine(&flat, &p[DENSE_W].data, &p[DENSE_B].data, &mut hidden_pre);
    ensure_finite(&hidden_pre, "cnn.dense")?;
    let hidden: Vec<f64> = hidden_pre.iter().map(|v| v.max(0.0)).collect();

    let mut logits = vec![0.0; dims.classes];
    affine(&hidden, &p[OUT_W].data, &p[OUT_B].data, &mut logits);
    ensure_finite(&logits, "cnn.out")?;
    Ok(CnnCache {
        conv_pre,
        argmax,
        flat,
        hidden_pre,
        hidden,
        probs: softmax(&logits),
    })
}

/// Accumulates `scale * dLoss/dparams` for one sample into `grads`.
pub(crate) fn backward(
    dims: &CnnDims,
    params: &ParamSet,
    x: &[f64],
    cache: &CnnCache,
    target: usize,
    scale: f64,
    grads: &mut ParamSet,
) {
    let p = &params.buffers;
    let g = &mut grads.buffers;

    let dz: Vec<f64> = cache
        .probs
        .iter()
        .enumerate()
        .map(|(c, &pc)| scale * (pc - if c == target { 1.0 } else { 0.0 }))
        .collect();

    let u = dims.dense;
    let mut d_hidden = vec![0.0; u];
    for (c, dzc) in dz.iter().enumerate() {
        g[OUT_B].data[c] += dzc;
        let w_row = &p[OUT_W].data[c * u..(c + 1) * u];
        let gw_row = &mut g[OUT_W].data[c * u..(c + 1) * u];
        for j in 0..u {
            gw_row[j] += dzc * cache.hidden[j];
            d_hidden[j] += dzc * w_row[j];
        }
    }

    let n_flat = dims.flat();
    let mut d_flat = vec![0.0; n_flat];
    for j in 0..u {
        if cache.hidden_pre[j] <= 0.0 {
            continue;
        }
        let dh = d_hidden[j];
        g[DENSE_B].data[j] += dh;
        let w_row = &p[DENSE_W].data[j * n_flat..(j + 1) * n_flat];
        let gw_row = &mut g[DENSE_W].data[j * n_flat..(j + 1) * n_flat];
        for k in 0..n_flat {
            gw_row[k] += dh * cache.flat[k];
            d_flat[k] += dh * w_row[k];
        }
    }

    // Only the winning position of each window receives gradient, and only
    // if its ReLU was active.
    for f in 0..dims.filters {
        for j in 0..dims.pooled_len {
            let cell = f * dims.pooled_len + j;
            let t = cache.argmax[cell];
            if cache.conv_pre[f * dims.conv_len + t] <= 0.0 {
                continue;
            }
            let d = d_flat[cell];
            g[CONV_B].data[f] += d;
            for k in 0..dims.kernel {
                g[CONV_W].data[f * dims.kernel + k] += d * x[t + k];
            }
        }
    }
}
