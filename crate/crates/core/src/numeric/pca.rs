use serde::{Deserialize, Serialize};

use super::matrix::{matmul, Matrix};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Principal components fitted by eigendecomposition of the sample
/// covariance (divisor `n - 1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k x d`, one orthonormal component per row.
    pub components: Matrix,
    /// Variance along each component, non-increasing.
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.rows()
    }

    pub fn dim(&self) -> usize {
        self.components.cols()
    }

    /// Maps projected coordinates back to the input space.
    pub fn reconstruct(&self, projected: &Matrix) -> Result<Matrix> {
        let mut out = matmul(projected, &self.components)?;
        for r in 0..out.rows() {
            for (v, m) in out.row_mut(r).iter_mut().zip(&self.mean) {
                *v += m;
            }
        }
        Ok(out)
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in non-increasing order and a matrix whose rows are
/// the matching unit eigenvectors. Each eigenvector is oriented so its
/// largest-magnitude entry (first one on ties) is positive.
pub fn symmetric_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::shape(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let mut m: Vec<Vec<f64>> = a.iter_rows().map(<[f64]>::to_vec).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    let total: f64 = m.iter().flatten().map(|x| x * x).sum();
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off <= f64::EPSILON * f64::EPSILON * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in m.iter_mut() {
                    let (kp, kq) = (row[p], row[q]);
                    row[p] = c * kp - s * kq;
                    row[q] = s * kp + c * kq;
                }
                for k in 0..n {
                    let (pk, qk) = (m[p][k], m[q][k]);
                    m[p][k] = c * pk - s * qk;
                    m[q][k] = s * pk + c * qk;
                }
                m[p][q] = 0.0;
                m[q][p] = 0.0;
                for row in v.iter_mut() {
                    let (kp, kq) = (row[p], row[q]);
                    row[p] = c * kp - s * kq;
                    row[q] = s * kp + c * kq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j][j].total_cmp(&m[i][i]).then(i.cmp(&j)));

    let values: Vec<f64> = order.iter().map(|&i| m[i][i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (out_row, &col) in order.iter().enumerate() {
        let mut vec: Vec<f64> = (0..n).map(|k| v[k][col]).collect();
        orient(&mut vec);
        vectors.row_mut(out_row).copy_from_slice(&vec);
    }
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::numeric("symmetric_eigen", "non-finite eigenvalue"));
    }
    Ok((values, vectors))
}

fn orient(vec: &mut [f64]) {
    let mut best = 0;
    for (i, x) in vec.iter().enumerate() {
        if x.abs() > vec[best].abs() {
            best = i;
        }
    }
    if vec.get(best).is_some_and(|&x| x < 0.0) {
        vec.iter_mut().for_each(|x| *x = -*x);
    }
}

pub fn pca_fit(data: &Matrix, k: usize) -> Result<PcaModel> {
    let (n, d) = data.shape();
    if n < 2 {
        return Err(Error::domain(format!("pca needs at least 2 rows, got {n}")));
    }
    if k == 0 || k > d {
        return Err(Error::domain(format!(
            "pca component count {k} outside 1..={d}"
        )));
    }
    let mean = data.column_means();
    let mut cov = Matrix::zeros(d, d);
    for row in data.iter_rows() {
        for i in 0..d {
            let di = row[i] - mean[i];
            for j in i..d {
                let v = cov.get(i, j) + di * (row[j] - mean[j]);
                cov.set(i, j, v);
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..d {
        for j in i..d {
            let v = cov.get(i, j) / denom;
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
    }

    let (values, vectors) = symmetric_eigen(&cov)?;
    let components = vectors.select_rows(&(0..k).collect::<Vec<_>>());
    let explained_variance = values[..k].iter().map(|&v| v.max(0.0)).collect();
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
    })
}

/// Projects `(data - mean)` onto the model's components: `rows x k`.
pub fn pca_transform(model: &PcaModel, data: &Matrix) -> Result<Matrix> {
    if data.cols() != model.dim() {
        return Err(Error::shape(format!(
            "pca model has dimension {}, data has {} columns",
            model.dim(),
            data.cols()
        )));
    }
    let mut centered = data.clone();
    for r in 0..centered.rows() {
        for (v, m) in centered.row_mut(r).iter_mut().zip(&model.mean) {
            *v -= m;
        }
    }
    matmul(&centered, &model.components.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_y_equals_x() {
        let data = Matrix::from_rows(&[
            vec![-2.0, -2.0],
            vec![-1.0, -1.0],
            vec![0.5, 0.5],
            vec![3.0, 3.0],
        ])
        .unwrap();
        let model = pca_fit(&data, 2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((model.components.get(0, 0) - h).abs() < 1e-12);
        assert!((model.components.get(0, 1) - h).abs() < 1e-12);
        assert!(model.explained_variance[1] < 1e-9);

        let proj = pca_transform(&model, &data).unwrap();
        for r in 0..proj.rows() {
            assert!(proj.get(r, 1).abs() < 1e-9);
        }
    }

    #[test]
    fn identical_rows_have_zero_variance() {
        let data = Matrix::from_rows(&vec![vec![3.0, -1.0, 7.0]; 5]).unwrap();
        let model = pca_fit(&data, 3).unwrap();
        assert!(model.explained_variance.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mean_row_maps_to_zero() {
        let data = Matrix::from_rows(&[
            vec![1.0, 2.0, 0.0],
            vec![3.0, -1.0, 1.0],
            vec![0.0, 0.0, 5.0],
        ])
        .unwrap();
        let model = pca_fit(&data, 2).unwrap();
        let mean = Matrix::from_rows(std::slice::from_ref(&model.mean)).unwrap();
        let p = pca_transform(&model, &mean).unwrap();
        assert!(p.as_slice().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn k_out_of_range() {
        let data = Matrix::zeros(3, 2);
        assert!(matches!(pca_fit(&data, 0), Err(Error::Domain(_))));
        assert!(matches!(pca_fit(&data, 3), Err(Error::Domain(_))));
        assert!(pca_fit(&Matrix::zeros(1, 2), 1).is_err());
    }

    #[test]
    fn transform_shape_mismatch() {
        let model = pca_fit(&Matrix::identity(3), 1).unwrap();
        assert!(matches!(
            pca_transform(&model, &Matrix::zeros(2, 2)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn eigen_of_diagonal_sorted() {
        let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let (vals, vecs) = symmetric_eigen(&a).unwrap();
        assert_eq!(vals, vec![4.0, 1.0]);
        assert_eq!(vecs.row(0), &[0.0, 1.0]);
    }
}
