//! Dense linear algebra, the seeded random stream and PCA.

mod matrix;
mod pca;
mod rng;

pub use matrix::{matmul, Matrix};
pub use pca::{pca_fit, pca_transform, symmetric_eigen, PcaModel};
pub use rng::{rng_normal, rng_shuffle, rng_uniform, RngStream};
