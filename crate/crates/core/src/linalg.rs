//! SVD, nuclear norm, and Gram factorization.
//!
//! Thin facade over nalgebra's pure-Rust decompositions so every consumer in
//! this crate shares one convergence policy and one convention (descending
//! singular values, thin factors).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::repr::{GramMatrix, RepresentationMatrix};

/// Iteration cap for the implicit-shift SVD/eigen loops.
const MAX_ITER: usize = 10_000;

/// Thin singular value decomposition `M = U diag(S) V^T`.
///
/// `U` is `m x k`, `V` is `n x k` with `k = min(m, n)`; singular values are
/// sorted in descending order and non-negative.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl SvdFactors {
    /// Reconstructs `U diag(S) V^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (j, sv) in self.s.iter().enumerate() {
            for i in 0..us.nrows() {
                us[(i, j)] *= sv;
            }
        }
        us * self.v.transpose()
    }
}

/// Thin SVD with singular values sorted in descending order.
pub fn svd(m: &DMatrix<f64>) -> Result<SvdFactors> {
    let decomp = m
        .clone()
        .try_svd(true, true, f64::EPSILON, MAX_ITER)
        .ok_or(Error::ConvergenceFailure)?;
    let u = decomp.u.ok_or(Error::ConvergenceFailure)?;
    let v_t = decomp.v_t.ok_or(Error::ConvergenceFailure)?;
    Ok(SvdFactors {
        u,
        s: decomp.singular_values,
        v: v_t.transpose(),
    })
}

/// Sum of singular values.
pub fn nuclear_norm(m: &DMatrix<f64>) -> Result<f64> {
    let sv = m
        .clone()
        .try_svd(false, false, f64::EPSILON, MAX_ITER)
        .ok_or(Error::ConvergenceFailure)?
        .singular_values;
    Ok(sv.iter().sum())
}

/// Largest singular value (spectral norm).
pub fn spectral_norm(m: &DMatrix<f64>) -> Result<f64> {
    let sv = m
        .clone()
        .try_svd(false, false, f64::EPSILON, MAX_ITER)
        .ok_or(Error::ConvergenceFailure)?
        .singular_values;
    Ok(sv.iter().cloned().fold(0.0, f64::max))
}

/// Eigenvalues and eigenvectors of a symmetric matrix, sorted descending.
///
/// Returns `(values, vectors)` with eigenvectors as columns.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let eig = m
        .clone()
        .try_symmetric_eigen(f64::EPSILON, MAX_ITER)
        .ok_or(Error::ConvergenceFailure)?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = eig.eigenvectors.select_columns(order.iter());
    Ok((values, vectors))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    let eig = m
        .clone()
        .try_symmetric_eigen(f64::EPSILON, MAX_ITER)
        .ok_or(Error::ConvergenceFailure)?;
    Ok(eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// Eigenvalue count above `1e-8 * max(lambda_max, 1)`.
///
/// Exact rank is meaningless in floating point; this threshold is the
/// crate-wide convention.
pub fn numerical_rank(k: &GramMatrix) -> Result<usize> {
    let (values, _) = symmetric_eigen(k.data())?;
    let lambda_max = values.iter().cloned().fold(0.0, f64::max);
    let threshold = 1e-8 * lambda_max.max(1.0);
    Ok(values.iter().filter(|&&v| v > threshold).count())
}

/// Realizes a representation whose Gram matrix equals `k`.
///
/// Eigenvalues in `[-1e-8, 0]` are clamped to zero; the factor uses the top
/// `target_dim` eigenpairs, zero-padding unused columns. Fails with
/// [`Error::RankExceedsDim`] when the numerical rank needs more columns than
/// requested.
pub fn factor_gram(k: &GramMatrix, target_dim: usize) -> Result<RepresentationMatrix> {
    if target_dim == 0 {
        return Err(Error::InvalidConfig("target_dim must be >= 1".into()));
    }
    let (values, vectors) = symmetric_eigen(k.data())?;
    let lambda_max = values.iter().cloned().fold(0.0, f64::max);
    let threshold = 1e-8 * lambda_max.max(1.0);
    let rank = values.iter().filter(|&&v| v > threshold).count();
    if rank > target_dim {
        return Err(Error::RankExceedsDim { rank, target_dim });
    }
    let n = k.n();
    let mut r = DMatrix::zeros(n, target_dim);
    for j in 0..rank {
        let scale = values[j].max(0.0).sqrt();
        for i in 0..n {
            r[(i, j)] = vectors[(i, j)] * scale;
        }
    }
    RepresentationMatrix::new(r)
}

/// Moore-Penrose pseudoinverse via the thin SVD.
///
/// Singular values below `max(m, n) * eps * s_max` are treated as zero.
pub fn pseudoinverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let f = svd(m)?;
    let s_max = f.s.iter().cloned().fold(0.0, f64::max);
    let cutoff = (m.nrows().max(m.ncols()) as f64) * f64::EPSILON * s_max;
    let mut v_scaled = f.v.clone();
    for (j, sv) in f.s.iter().enumerate() {
        let inv = if *sv > cutoff { 1.0 / sv } else { 0.0 };
        for i in 0..v_scaled.nrows() {
            v_scaled[(i, j)] *= inv;
        }
    }
    Ok(v_scaled * f.u.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repr::{gram, normalize_rows};
    use nalgebra::dmatrix;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>() * 2.0 - 1.0)
    }

    #[test]
    fn svd_of_diagonal_sorts_descending() {
        let m = dmatrix![3.0, 0.0; 0.0, 4.0];
        let f = svd(&m).unwrap();
        assert!((f.s[0] - 4.0).abs() < 1e-12);
        assert!((f.s[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn svd_of_zero_matrix() {
        let m = DMatrix::<f64>::zeros(2, 2);
        let f = svd(&m).unwrap();
        assert_eq!(f.s.len(), 2);
        assert!(f.s.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn svd_reconstructs_random_5x3() {
        let m = random_matrix(5, 3, 7);
        let f = svd(&m).unwrap();
        let err = (f.reconstruct() - &m).norm() / m.norm();
        assert!(err < 1e-8, "reconstruction error {err}");
        assert!((f.u.transpose() * &f.u - DMatrix::identity(3, 3)).norm() < 1e-8);
        assert!((f.v.transpose() * &f.v - DMatrix::identity(3, 3)).norm() < 1e-8);
    }

    #[test]
    fn nuclear_norm_examples() {
        assert!((nuclear_norm(&dmatrix![3.0, 0.0; 0.0, 4.0]).unwrap() - 7.0).abs() < 1e-12);
        assert!((nuclear_norm(&DMatrix::identity(5, 5)).unwrap() - 5.0).abs() < 1e-12);
        // M^T M has eigenvalues {0, 1}, so the singular values are {0, 1}.
        assert!((nuclear_norm(&dmatrix![0.0, 1.0; 0.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn factor_gram_identity() {
        let k = gram(&normalize_rows(&DMatrix::identity(2, 2)).unwrap());
        let r = factor_gram(&k, 2).unwrap();
        let rebuilt = gram(&r);
        assert!((rebuilt.data() - k.data()).norm() < 1e-10);
    }

    #[test]
    fn factor_gram_rank_one() {
        let k = GramMatrix::new(dmatrix![1.0, 1.0; 1.0, 1.0]).unwrap();
        let r = factor_gram(&k, 1).unwrap();
        // [[1],[1]] up to sign.
        let v = r.data()[(0, 0)];
        assert!((v.abs() - 1.0).abs() < 1e-12);
        assert!((r.data()[(1, 0)] - v).abs() < 1e-12);
    }

    #[test]
    fn factor_gram_rejects_rank_overflow() {
        let k = gram(&normalize_rows(&DMatrix::identity(3, 3)).unwrap());
        assert!(matches!(
            factor_gram(&k, 2),
            Err(Error::RankExceedsDim {
                rank: 3,
                target_dim: 2
            })
        ));
    }

    #[test]
    fn pseudoinverse_least_squares_fixture() {
        // Rank-1 rows: pinv averages the antipodal targets to zero.
        let rs = dmatrix![1.0, 0.0; 1.0, 0.0];
        let p = pseudoinverse(&rs).unwrap();
        let expected = dmatrix![0.5, 0.5; 0.0, 0.0];
        assert!((p - expected).norm() < 1e-12);
    }

    #[test]
    fn numerical_rank_counts_significant_eigenvalues() {
        let r = normalize_rows(&dmatrix![1.0, 0.0; 1.0, 0.0]).unwrap();
        assert_eq!(numerical_rank(&gram(&r)).unwrap(), 1);
        let r2 = normalize_rows(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(numerical_rank(&gram(&r2)).unwrap(), 3);
    }
}
