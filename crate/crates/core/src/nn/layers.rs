//! Forward building blocks. The training paths in `cnn` and `lstm` reuse
//! these loops and keep the intermediates they need for backprop.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Softmax,
    None,
}

/// Valid cross-correlation pre-activations, stride 1: `filters x (L - K + 1)`
/// written row-major into `out`.
pub(crate) fn conv1d_pre(
    input: &[f64],
    kernels: &[f64],
    bias: &[f64],
    kernel_size: usize,
    out: &mut [f64],
) {
    let out_len = input.len() + 1 - kernel_size;
    for (f, b) in bias.iter().enumerate() {
        let w = &kernels[f * kernel_size..(f + 1) * kernel_size];
        for t in 0..out_len {
            let mut acc = *b;
            for (wk, xk) in w.iter().zip(&input[t..t + kernel_size]) {
                acc += wk * xk;
            }
            out[f * out_len + t] = acc;
        }
    }
}

/// Single-channel 1D convolution (no padding, stride 1) followed by ReLU.
/// `kernels` is `filters x kernel_size`.
pub fn conv1d_forward(input: &[f64], kernels: &Matrix, bias: &[f64]) -> Result<Matrix> {
    let (filters, k) = kernels.shape();
    if k == 0 || input.len() < k {
        return Err(Error::shape(format!(
            "input length {} shorter than kernel size {k}",
            input.len()
        )));
    }
    if bias.len() != filters {
        return Err(Error::shape(format!(
            "{filters} filters but {} biases",
            bias.len()
        )));
    }
    let out_len = input.len() + 1 - k;
    let mut out = vec![0.0; filters * out_len];
    conv1d_pre(input, kernels.as_slice(), bias, k, &mut out);
    out.iter_mut().for_each(|v| *v = v.max(0.0));
    Matrix::from_vec(filters, out_len, out)
}

/// Non-overlapping max pooling along each row; a trailing partial window is
/// dropped. Returns the pooled map and, per output cell, the column of the
/// winning input (first maximum on ties).
pub fn maxpool1d(input: &Matrix, pool_size: usize) -> Result<(Matrix, Vec<usize>)> {
    if pool_size < 1 {
        return Err(Error::domain("pool size must be at least 1"));
    }
    if input.cols() < pool_size {
        return Err(Error::shape(format!(
            "length {} shorter than pool size {pool_size}",
            input.cols()
        )));
    }
    let out_len = input.cols() / pool_size;
    let mut pooled = Matrix::zeros(input.rows(), out_len);
    let mut argmax = Vec::with_capacity(input.rows() * out_len);
    for r in 0..input.rows() {
        let row = input.row(r);
        for j in 0..out_len {
            let start = j * pool_size;
            let mut best = start;
            for t in start + 1..start + pool_size {
                if row[t] > row[best] {
                    best = t;
                }
            }
            pooled.set(r, j, row[best]);
            argmax.push(best);
        }
    }
    Ok((pooled, argmax))
}

/// Numerically stable softmax (max subtracted first).
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub(crate) fn affine(input: &[f64], weights: &[f64], bias: &[f64], out: &mut [f64]) {
    let n_in = input.len();
    for (o, (y, b)) in out.iter_mut().zip(bias).enumerate() {
        let row = &weights[o * n_in..(o + 1) * n_in];
        *y = b + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
    }
}

/// `activation(W x + b)` with `W` shaped `out x in`.
pub fn dense_forward(
    input: &[f64],
    weights: &Matrix,
    bias: &[f64],
    activation: Activation,
) -> Result<Vec<f64>> {
    if weights.cols() != input.len() || weights.rows() != bias.len() {
        return Err(Error::shape(format!(
            "dense weights {}x{}, input {}, bias {}",
            weights.rows(),
            weights.cols(),
            input.len(),
            bias.len()
        )));
    }
    let mut z = vec![0.0; bias.len()];
    affine(input, weights.as_slice(), bias, &mut z);
    Ok(match activation {
        Activation::Relu => z.into_iter().map(|v| v.max(0.0)).collect(),
        Activation::Softmax => softmax(&z),
        Activation::None => z,
    })
}

/// LSTM parameters with gates stacked in the order input, forget, candidate,
/// output: `w_input` is `4H x d`, `w_hidden` is `4H x H`, `bias` is `4H`.
#[derive(Clone, Copy, Debug)]
pub struct LstmWeights<'a> {
    pub w_input: &'a [f64],
    pub w_hidden: &'a [f64],
    pub bias: &'a [f64],
    pub hidden_units: usize,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Gate activations `[i | f | g | o]` for one step.
pub(crate) fn lstm_gates(w: &LstmWeights<'_>, x: &[f64], h_prev: &[f64], gates: &mut [f64]) {
    let h = w.hidden_units;
    let d = x.len();
    for r in 0..4 * h {
        let mut a = w.bias[r];
        for (wx, xv) in w.w_input[r * d..(r + 1) * d].iter().zip(x) {
            a += wx * xv;
        }
        for (wh, hv) in w.w_hidden[r * h..(r + 1) * h].iter().zip(h_prev) {
            a += wh * hv;
        }
        gates[r] = if (2 * h..3 * h).contains(&r) {
            a.tanh()
        } else {
            sigmoid(a)
        };
    }
}

/// Runs the recurrence over `sequence` (`T x d`) from zero state and returns
/// the final hidden state.
pub fn lstm_forward(sequence: &Matrix, weights: &LstmWeights<'_>) -> Result<Vec<f64>> {
    let (t_len, d) = sequence.shape();
    let h = weights.hidden_units;
    if t_len == 0 {
        return Err(Error::shape("lstm needs at least one timestep"));
    }
    if weights.w_input.len() != 4 * h * d
        || weights.w_hidden.len() != 4 * h * h
        || weights.bias.len() != 4 * h
    {
        return Err(Error::shape(format!(
            "lstm buffers do not fit hidden {h}, input {d}"
        )));
    }
    let mut hs = vec![0.0; h];
    let mut cs = vec![0.0; h];
    let mut gates = vec![0.0; 4 * h];
    for t in 0..t_len {
        lstm_gates(weights, sequence.row(t), &hs, &mut gates);
        for j in 0..h {
            let (i, f, g, o) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
            cs[j] = f * cs[j] + i * g;
            hs[j] = o * cs[j].tanh();
        }
    }
    Ok(hs)
}

/// `-ln(max(p[target], 1e-12))`.
pub fn cross_entropy(predicted: &[f64], target_class: usize) -> Result<f64> {
    let p = predicted.get(target_class).ok_or_else(|| {
        Error::domain(format!(
            "class index {target_class} out of range for {} outputs",
            predicted.len()
        ))
    })?;
    let sum: f64 = predicted.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::domain(format!(
            "predicted distribution sums to {sum}"
        )));
    }
    Ok(-p.max(1e-12).ln())
}
