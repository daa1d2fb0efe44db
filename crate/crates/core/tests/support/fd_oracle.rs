//! Central finite-difference gradient oracle.
//!
//! The loss is re-evaluated by an independent forward pass written in
//! double-double arithmetic (~32 significant digits), so the difference
//! quotient is limited by truncation error rather than by f64 cancellation.
//! Nothing here calls into the network code under test; parameters are read
//! by buffer name from the model.
#![allow(dead_code)]

use std::ops::{Add, Div, Mul, Neg, Sub};

use earlywarn_core::data::LabelClass;
use earlywarn_core::nn::{Architecture, TrainedNet};
use earlywarn_core::numeric::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    const LN2: Dd = Dd {
        hi: std::f64::consts::LN_2,
        lo: 2.319_046_813_846_299_6e-17,
    };

    pub fn from(v: f64) -> Dd {
        Dd { hi: v, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn ldexp(self, k: i32) -> Dd {
        let s = 2f64.powi(k);
        Dd {
            hi: self.hi * s,
            lo: self.lo * s,
        }
    }

    pub fn exp(self) -> Dd {
        if self.hi < -700.0 {
            return Dd::ZERO;
        }
        let k = (self.hi / std::f64::consts::LN_2).round();
        let r = self - Dd::LN2 * Dd::from(k);
        let r = r.ldexp(-10);
        let mut term = Dd::ONE;
        let mut sum = Dd::ONE;
        for n in 1..=12 {
            term = term * r / Dd::from(n as f64);
            sum = sum + term;
        }
        for _ in 0..10 {
            sum = sum * sum;
        }
        sum.ldexp(k as i32)
    }

    pub fn ln(self) -> Dd {
        let mut y = Dd::from(self.hi.ln());
        for _ in 0..2 {
            y = y + self * (-y).exp() - Dd::ONE;
        }
        y
    }

    pub fn tanh(self) -> Dd {
        let neg = self.hi < 0.0;
        let a = if neg { -self } else { self };
        let t = (Dd::from(-2.0) * a).exp();
        let v = (Dd::ONE - t) / (Dd::ONE + t);
        if neg {
            -v
        } else {
            v
        }
    }

    pub fn sigmoid(self) -> Dd {
        Dd::ONE / (Dd::ONE + (-self).exp())
    }

    pub fn relu(self) -> Dd {
        if self.hi > 0.0 {
            self
        } else {
            Dd::ZERO
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p) + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::from(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::from(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from(q3)
    }
}

type Buffers = Vec<Vec<Dd>>;

fn buffer<'a>(net: &TrainedNet, bufs: &'a Buffers, name: &str) -> &'a [Dd] {
    let i = net
        .parameters
        .buffers
        .iter()
        .position(|b| b.name == name)
        .unwrap_or_else(|| panic!("no buffer {name}"));
    &bufs[i]
}

fn affine(x: &[Dd], w: &[Dd], b: &[Dd]) -> Vec<Dd> {
    let n = x.len();
    b.iter()
        .enumerate()
        .map(|(o, &bo)| {
            x.iter()
                .zip(&w[o * n..(o + 1) * n])
                .fold(bo, |acc, (&xi, &wi)| acc + xi * wi)
        })
        .collect()
}

/// `logsumexp(z) - z[target]`.
fn cross_entropy(z: &[Dd], target: usize) -> Dd {
    let m = z.iter().fold(z[0], |a, &b| if b > a { b } else { a });
    let s = z.iter().fold(Dd::ZERO, |acc, &v| acc + (v - m).exp());
    s.ln() + m - z[target]
}

fn cnn_logits(net: &TrainedNet, bufs: &Buffers, x: &[f64]) -> Vec<Dd> {
    let Architecture::Cnn(spec) = &net.architecture else {
        unreachable!()
    };
    let (k, pool) = (spec.kernel_size, spec.pool_size);
    let conv_w = buffer(net, bufs, "conv.weight");
    let conv_b = buffer(net, bufs, "conv.bias");
    let conv_len = x.len() + 1 - k;
    let mut flat = Vec::new();
    for (f, &bf) in conv_b.iter().enumerate() {
        let act: Vec<Dd> = (0..conv_len)
            .map(|t| {
                (0..k)
                    .fold(bf, |acc, j| acc + conv_w[f * k + j] * Dd::from(x[t + j]))
                    .relu()
            })
            .collect();
        for win in act.chunks_exact(pool) {
            flat.push(win.iter().fold(win[0], |a, &b| if b > a { b } else { a }));
        }
    }
    let hidden: Vec<Dd> = affine(
        &flat,
        buffer(net, bufs, "dense.weight"),
        buffer(net, bufs, "dense.bias"),
    )
    .into_iter()
    .map(Dd::relu)
    .collect();
    affine(
        &hidden,
        buffer(net, bufs, "out.weight"),
        buffer(net, bufs, "out.bias"),
    )
}

fn lstm_logits(net: &TrainedNet, bufs: &Buffers, x: &[f64]) -> Vec<Dd> {
    let Architecture::Lstm(spec) = &net.architecture else {
        unreachable!()
    };
    let h = spec.hidden_units;
    let wi = buffer(net, bufs, "lstm.w_input");
    let wh = buffer(net, bufs, "lstm.w_hidden");
    let b = buffer(net, bufs, "lstm.bias");
    let mut hs = vec![Dd::ZERO; h];
    let mut cs = vec![Dd::ZERO; h];
    for &xt in x {
        let pre: Vec<Dd> = (0..4 * h)
            .map(|r| {
                (0..h).fold(b[r] + wi[r] * Dd::from(xt), |acc, j| {
                    acc + wh[r * h + j] * hs[j]
                })
            })
            .collect();
        for j in 0..h {
            let i = pre[j].sigmoid();
            let f = pre[h + j].sigmoid();
            let g = pre[2 * h + j].tanh();
            let o = pre[3 * h + j].sigmoid();
            cs[j] = f * cs[j] + i * g;
            hs[j] = o * cs[j].tanh();
        }
    }
    affine(
        &hs,
        buffer(net, bufs, "out.weight"),
        buffer(net, bufs, "out.bias"),
    )
}

fn mean_loss(net: &TrainedNet, bufs: &Buffers, x: &Matrix, y: &[LabelClass]) -> Dd {
    let mut total = Dd::ZERO;
    for (row, label) in x.iter_rows().zip(y) {
        let z = match net.architecture {
            Architecture::Cnn(_) => cnn_logits(net, bufs, row),
            Architecture::Lstm(_) => lstm_logits(net, bufs, row),
        };
        total = total + cross_entropy(&z, label.index());
    }
    total / Dd::from(y.len() as f64)
}

/// `(L(theta + step e_k) - L(theta - step e_k)) / (2 step)` for every
/// coordinate, grouped by parameter buffer.
pub fn central_difference(
    net: &TrainedNet,
    x: &Matrix,
    y: &[LabelClass],
    step: f64,
) -> Vec<Vec<f64>> {
    let mut bufs: Buffers = net
        .parameters
        .buffers
        .iter()
        .map(|b| b.data.iter().map(|&v| Dd::from(v)).collect())
        .collect();
    let h = Dd::from(step);
    let mut out = Vec::with_capacity(bufs.len());
    for b in 0..bufs.len() {
        let mut grad = Vec::with_capacity(bufs[b].len());
        for k in 0..bufs[b].len() {
            let orig = bufs[b][k];
            bufs[b][k] = orig + h;
            let up = mean_loss(net, &bufs, x, y);
            bufs[b][k] = orig - h;
            let down = mean_loss(net, &bufs, x, y);
            bufs[b][k] = orig;
            grad.push(((up - down) / (h + h)).to_f64());
        }
        out.push(grad);
    }
    out
}

/// Mean loss of the unperturbed network, for cross-checking the oracle's
/// forward pass against the implementation.
pub fn loss(net: &TrainedNet, x: &Matrix, y: &[LabelClass]) -> f64 {
    let bufs: Buffers = net
        .parameters
        .buffers
        .iter()
        .map(|b| b.data.iter().map(|&v| Dd::from(v)).collect())
        .collect();
    mean_loss(net, &bufs, x, y).to_f64()
}

#[cfg(test)]
mod dd_tests {
    #[allow(unused_imports)]
    use super::Dd;

    #[test]
    fn transcendental_accuracy() {
        for &x in &[-3.0, -0.5, 1e-6, 0.7, 2.5] {
            let d = Dd::from(x);
            assert!((d.exp().to_f64() - x.exp()).abs() <= 2.0 * f64::EPSILON * x.exp());
            assert!((d.tanh().to_f64() - x.tanh()).abs() <= 4.0 * f64::EPSILON);
            let back = d.exp().ln().to_f64();
            assert!((back - x).abs() <= 1e-30f64.max(4.0 * f64::EPSILON * x.abs()));
        }
        // (1 + 1e-20) is not representable in f64 but is in double-double.
        let tiny = Dd::ONE + Dd::from(1e-20);
        assert_eq!((tiny - Dd::ONE).to_f64(), 1e-20);
    }
}
