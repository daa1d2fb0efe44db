use earlywarn_core::numeric::{pca_fit, pca_transform, symmetric_eigen, Matrix, RngStream};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

fn random_matrix(seed: u64, rows: usize, cols: usize) -> Matrix {
    let mut rng = RngStream::new(seed);
    // Unequal column scales keep the eigenvalues well separated.
    let data = (0..rows * cols)
        .map(|i| rng.normal() * (1.0 + (i % cols) as f64))
        .collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn centered(m: &Matrix) -> DMatrix<f64> {
    let mut x = to_na(m);
    for c in 0..x.ncols() {
        let mean = x.column(c).mean();
        x.column_mut(c).add_scalar_mut(-mean);
    }
    x
}

/// Eigenvalues of the n - 1 covariance, largest first.
fn oracle_variances(m: &Matrix) -> Vec<f64> {
    let x = centered(m);
    let cov = x.transpose() * &x / (m.rows() as f64 - 1.0);
    let mut ev: Vec<f64> = SymmetricEigen::new(cov)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

fn assert_orthonormal(components: &Matrix, tol: f64) {
    for i in 0..components.rows() {
        for j in 0..components.rows() {
            let dot: f64 = components
                .row(i)
                .iter()
                .zip(components.row(j))
                .map(|(a, b)| a * b)
                .sum();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((dot - want).abs() < tol, "<c{i}, c{j}> = {dot}");
        }
    }
}

#[test]
fn variances_match_covariance_eigendecomposition() {
    for seed in 0..20 {
        let data = random_matrix(seed, 20, 5);
        let model = pca_fit(&data, 5).unwrap();
        let oracle = oracle_variances(&data);
        for (got, want) in model.explained_variance.iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-8, "seed {seed}: {got} vs {want}");
        }
        assert_orthonormal(&model.components, 1e-9);
        assert!(model.explained_variance.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn components_match_oracle_eigenvectors_up_to_sign() {
    let data = random_matrix(99, 20, 5);
    let model = pca_fit(&data, 5).unwrap();
    let x = centered(&data);
    let eig = SymmetricEigen::new(x.transpose() * &x / 19.0);
    let mut order: Vec<usize> = (0..5).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    for (k, &col) in order.iter().enumerate() {
        let dot: f64 = (0..5)
            .map(|i| model.components.get(k, i) * eig.eigenvectors[(i, col)])
            .sum();
        assert!(
            (dot.abs() - 1.0).abs() < 1e-9,
            "component {k}: |dot| = {}",
            dot.abs()
        );
    }
}

#[test]
fn eigen_solver_matches_oracle_on_symmetric_input() {
    let a = random_matrix(5, 6, 6);
    let sym = Matrix::from_vec(
        6,
        6,
        (0..36)
            .map(|i| a.get(i / 6, i % 6) + a.get(i % 6, i / 6))
            .collect(),
    )
    .unwrap();
    let (values, vectors) = symmetric_eigen(&sym).unwrap();
    let mut oracle: Vec<f64> = SymmetricEigen::new(to_na(&sym))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    oracle.sort_by(|a, b| b.total_cmp(a));
    for (v, o) in values.iter().zip(&oracle) {
        assert!((v - o).abs() < 1e-9);
    }
    assert_orthonormal(&vectors, 1e-9);
}

#[test]
fn rank_one_data_has_one_component() {
    let mut rng = RngStream::new(3);
    let direction = [0.3, -1.2, 0.5, 2.0];
    let rows: Vec<Vec<f64>> = (0..15)
        .map(|_| {
            let t = rng.normal() * 4.0;
            direction
                .iter()
                .enumerate()
                .map(|(j, d)| 10.0 * j as f64 + t * d)
                .collect()
        })
        .collect();
    let model = pca_fit(&Matrix::from_rows(&rows).unwrap(), 2).unwrap();
    assert!(model.explained_variance[0] > 1.0);
    assert!(model.explained_variance[1] < 1e-9);
}

#[test]
fn projection_matches_truncated_svd() {
    for seed in [1, 2, 3] {
        let data = random_matrix(seed, 20, 5);
        let k = 2;
        let model = pca_fit(&data, k).unwrap();
        let recon = model
            .reconstruct(&pca_transform(&model, &data).unwrap())
            .unwrap();

        let x = centered(&data);
        let svd = x.clone().svd(true, true);
        let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
        idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let mut approx = DMatrix::zeros(20, 5);
        for &i in idx.iter().take(k) {
            approx += svd.singular_values[i] * u.column(i) * v_t.row(i);
        }
        let means = data.column_means();
        for r in 0..20 {
            for c in 0..5 {
                let want = approx[(r, c)] + means[c];
                assert!(
                    (recon.get(r, c) - want).abs() < 1e-8,
                    "seed {seed} ({r},{c})"
                );
            }
        }
        // Singular values relate to the variances by s^2 / (n - 1).
        for (j, &i) in idx.iter().take(k).enumerate() {
            let v = svd.singular_values[i].powi(2) / 19.0;
            assert!((model.explained_variance[j] - v).abs() < 1e-8);
        }
    }
}

#[test]
fn invalid_requests() {
    let data = random_matrix(1, 10, 3);
    assert!(pca_fit(&data, 0).is_err());
    assert!(pca_fit(&data, 4).is_err());
    assert!(pca_fit(&random_matrix(1, 1, 3), 1).is_err());
    let model = pca_fit(&data, 2).unwrap();
    assert!(pca_transform(&model, &random_matrix(2, 4, 2)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pca_properties(rows in 3usize..15, cols in 2usize..6, seed in any::<u64>()) {
        let data = random_matrix(seed, rows, cols);
        let model = pca_fit(&data, cols).unwrap();
        assert_orthonormal(&model.components, 1e-9);
        prop_assert!(model.explained_variance.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(model.explained_variance.iter().all(|&v| v >= 0.0));
        // Total variance is preserved.
        let x = centered(&data);
        let trace: f64 = (0..cols).map(|c| x.column(c).norm_squared()).sum::<f64>() / (rows as f64 - 1.0);
        let sum: f64 = model.explained_variance.iter().sum();
        prop_assert!((trace - sum).abs() < 1e-8 * trace.max(1.0));
    }
}
