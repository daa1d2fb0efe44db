use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::RngStream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamBuffer {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl ParamBuffer {
    pub fn zeros(name: &str, shape: &[usize]) -> Self {
        ParamBuffer {
            name: name.to_string(),
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    /// Uniform in `+-sqrt(6 / (fan_in + fan_out))`.
    pub fn glorot(
        name: &str,
        shape: &[usize],
        fan_in: usize,
        fan_out: usize,
        rng: &mut RngStream,
    ) -> Self {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let mut buf = ParamBuffer::zeros(name, shape);
        buf.data
            .iter_mut()
            .for_each(|w| *w = rng.uniform_range(-limit, limit));
        buf
    }
}

/// Named parameter buffers in a fixed order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub buffers: Vec<ParamBuffer>,
}

impl ParamSet {
    pub fn zeros_like(&self) -> ParamSet {
        ParamSet {
            buffers: self
                .buffers
                .iter()
                .map(|b| ParamBuffer::zeros(&b.name, &b.shape))
                .collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&ParamBuffer> {
        self.buffers.iter().find(|b| b.name == name)
    }

    pub fn len(&self) -> usize {
        self.buffers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffers.is_empty()
    }

    pub fn total_size(&self) -> usize {
        self.buffers.iter().map(|b| b.data.len()).sum()
    }

    pub fn same_layout(&self, other: &ParamSet) -> Result<()> {
        if self.buffers.len() != other.buffers.len() {
            return Err(Error::shape(format!(
                "{} buffers vs {}",
                self.buffers.len(),
                other.buffers.len()
            )));
        }
        for (a, b) in self.buffers.iter().zip(&other.buffers) {
            if a.name != b.name || a.shape != b.shape || a.data.len() != b.data.len() {
                return Err(Error::shape(format!(
                    "buffer `{}` {:?} does not match `{}` {:?}",
                    a.name, a.shape, b.name, b.shape
                )));
            }
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        for b in &mut self.buffers {
            b.data.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn first_non_finite(&self) -> Option<&str> {
        self.buffers
            .iter()
            .find(|b| b.data.iter().any(|v| !v.is_finite()))
            .map(|b| b.name.as_str())
    }
}
