//! Single LSTM layer over the feature sequence, then Dense(softmax) on the
//! final hidden state. Each feature is one timestep with a 1-dimensional
//! input.

use super::layers::{affine, lstm_gates, softmax, LstmWeights};
use super::net::LstmSpec;
use super::params::{ParamBuffer, ParamSet};
use crate::error::{Error, Result};
use crate::numeric::RngStream;

const W_INPUT: usize = 0;
const W_HIDDEN: usize = 1;
const BIAS: usize = 2;
const OUT_W: usize = 3;
const OUT_B: usize = 4;

const INPUT_DIM: usize = 1;

#[derive(Clone, Copy, Debug)]
pub(crate) struct LstmDims {
    steps: usize,
    hidden: usize,
    classes: usize,
}

impl LstmDims {
    pub(crate) fn new(spec: &LstmSpec, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::shape("lstm needs at least one timestep"));
        }
        Ok(LstmDims {
            steps,
            hidden: spec.hidden_units,
            classes: spec.output_classes,
        })
    }

    pub(crate) fn input_len(&self) -> usize {
        self.steps
    }

    pub(crate) fn init(&self, rng: &mut RngStream) -> ParamSet {
        let (h, c) = (self.hidden, self.classes);
        ParamSet {
            buffers: vec![
                ParamBuffer::glorot("lstm.w_input", &[4 * h, INPUT_DIM], INPUT_DIM, 4 * h, rng),
                ParamBuffer::glorot("lstm.w_hidden", &[4 * h, h], h, 4 * h, rng),
                ParamBuffer::zeros("lstm.bias", &[4 * h]),
                ParamBuffer::glorot("out.weight", &[c, h], h, c, rng),
                ParamBuffer::zeros("out.bias", &[c]),
            ],
        }
    }

    pub(crate) fn check_layout(&self, params: &ParamSet) -> Result<()> {
        let mut rng = RngStream::new(0);
        self.init(&mut rng).same_layout(params)
    }
}

pub(crate) struct LstmCache {
    /// Gate activations per step, `steps x 4H`.
    gates: Vec<f64>,
    /// Cell states `c_0 .. c_T`, `(steps + 1) x H`.
    cells: Vec<f64>,
    /// Hidden states `h_0 .. h_T`, `(steps + 1) x H`.
    hiddens: Vec<f64>,
    pub(crate) probs: Vec<f64>,
}

fn weights<'a>(dims: &LstmDims, params: &'a ParamSet) -> LstmWeights<'a> {
    LstmWeights {
        w_input: &params.buffers[W_INPUT].data,
        w_hidden: &params.buffers[W_HIDDEN].data,
        bias: &params.buffers[BIAS].data,
        hidden_units: dims.hidden,
    }
}

pub(crate) fn forward(dims: &LstmDims, params: &ParamSet, x: &[f64]) -> Result<LstmCache> {
    let h = dims.hidden;
    let w = weights(dims, params);
    let mut gates = vec![0.0; dims.steps * 4 * h];
    let mut cells = vec![0.0; (dims.steps + 1) * h];
    let mut hiddens = vec![0.0; (dims.steps + 1) * h];
    for t in 0..dims.steps {
        let (prev_h, next_h) = hiddens.split_at_mut((t + 1) * h);
        let g = &mut gates[t * 4 * h..(t + 1) * 4 * h];
        lstm_gates(&w, &x[t..t + 1], &prev_h[t * h..], g);
        for j in 0..h {
            let c = g[h + j] * cells[t * h + j] + g[j] * g[2 * h + j];
            cells[(t + 1) * h + j] = c;
            next_h[j] = g[3 * h + j] * c.tanh();
        }
    }
    if hiddens.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("lstm.recurrence", "non-finite hidden state"));
    }
    let mut logits = vec![0.0; dims.classes];
    affine(
        &hiddens[dims.steps * h..],
        &params.buffers[OUT_W].data,
        &params.buffers[OUT_B].data,
        &mut logits,
    );
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("lstm.out", "non-finite logits"));
    }
    Ok(LstmCache {
        gates,
        cells,
        hiddens,
        probs: softmax(&logits),
    })
}

/// Accumulates `scale * dLoss/dparams` for one sample into `grads`, with
/// backpropagation through every timestep.
pub(crate) fn backward(
    dims: &LstmDims,
    params: &ParamSet,
    x: &[f64],
    cache: &LstmCache,
    target: usize,
    scale: f64,
    grads: &mut ParamSet,
) {
    let h = dims.hidden;
    let p = &params.buffers;
    let g = &mut grads.buffers;
    let last = &cache.hiddens[dims.steps * h..];

    let mut dh = vec![0.0; h];
    for c in 0..dims.classes {
        let dz = scale * (cache.probs[c] - if c == target { 1.0 } else { 0.0 });
        g[OUT_B].data[c] += dz;
        for j in 0..h {
            g[OUT_W].data[c * h + j] += dz * last[j];
            dh[j] += dz * p[OUT_W].data[c * h + j];
        }
    }

    let mut dc = vec![0.0; h];
    let mut da = vec![0.0; 4 * h];
    for t in (0..dims.steps).rev() {
        let gates = &cache.gates[t * 4 * h..(t + 1) * 4 * h];
        let c_prev = &cache.cells[t * h..(t + 1) * h];
        let c_cur = &cache.cells[(t + 1) * h..(t + 2) * h];
        let h_prev = &cache.hiddens[t * h..(t + 1) * h];
        for j in 0..h {
            let (i, f, gg, o) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
            let tc = c_cur[j].tanh();
            let d_o = dh[j] * tc;
            let dcj = dc[j] + dh[j] * o * (1.0 - tc * tc);
            da[j] = dcj * gg * i * (1.0 - i);
            da[h + j] = dcj * c_prev[j] * f * (1.0 - f);
            da[2 * h + j] = dcj * i * (1.0 - gg * gg);
            da[3 * h + j] = d_o * o * (1.0 - o);
            dc[j] = dcj * f;
        }
        let xt = x[t];
        dh.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..4 * h {
            let dar = da[r];
            g[BIAS].data[r] += dar;
            g[W_INPUT].data[r] += dar * xt;
            let wh_row = &p[W_HIDDEN].data[r * h..(r + 1) * h];
            let gwh_row = &mut g[W_HIDDEN].data[r * h..(r + 1) * h];
            for j in 0..h {
                gwh_row[j] += dar * h_prev[j];
                dh[j] += dar * wh_row[j];
            }
        }
    }
}
