//! Representation and Gram matrix types.
//!
//! A [`RepresentationMatrix`] holds `n` feature vectors as rows of an `n x d`
//! dense matrix. Rows produced by [`normalize_rows`] have unit Euclidean norm;
//! the optimizer can intentionally let rows drift off the unit sphere when row
//! re-normalization is disabled, so unit norm is a checked property rather than
//! an unconditional invariant.
//!
//! A [`GramMatrix`] is the `n x n` matrix of pairwise inner products. Built
//! from a representation it is symmetric (explicitly symmetrized after the
//! product) and positive semi-definite by construction; raw constructors
//! validate both.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Row norms below this are treated as zero and rejected by normalization.
pub const ZERO_ROW_TOL: f64 = 1e-12;
/// Tolerance for the unit-row-norm check.
pub const UNIT_NORM_TOL: f64 = 1e-9;
/// Tolerance for symmetry of Gram matrices.
pub const SYMMETRY_TOL: f64 = 1e-9;
/// Numerical slack on the smallest eigenvalue of a PSD matrix.
pub const PSD_SLACK: f64 = -1e-8;

fn check_finite(data: &DMatrix<f64>) -> Result<()> {
    if data.nrows() == 0 || data.ncols() == 0 {
        return Err(Error::EmptyMatrix {
            rows: data.nrows(),
            cols: data.ncols(),
        });
    }
    for col in 0..data.ncols() {
        for row in 0..data.nrows() {
            if !data[(row, col)].is_finite() {
                return Err(Error::NonFinite { row, col });
            }
        }
    }
    Ok(())
}

/// `n` feature vectors of dimension `d`, stored row-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationMatrix {
    data: DMatrix<f64>,
}

impl RepresentationMatrix {
    /// Wraps a finite, non-empty matrix without normalizing its rows.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        check_finite(&data)?;
        Ok(Self { data })
    }

    /// Number of feature vectors (rows).
    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    /// Embedding dimension (columns).
    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.data
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.data
    }

    /// True when every row has unit Euclidean norm within `tol`.
    pub fn has_unit_rows(&self, tol: f64) -> bool {
        self.data
            .row_iter()
            .all(|row| (row.norm() - 1.0).abs() <= tol)
    }

    /// Extracts the sub-matrix formed by the given rows, in order.
    pub fn select_rows(&self, indices: &[usize]) -> RepresentationMatrix {
        RepresentationMatrix {
            data: self.data.select_rows(indices.iter()),
        }
    }

    /// Subtracts column means and re-normalizes rows.
    ///
    /// Optional preprocessing; none of the distances applies it implicitly.
    pub fn centered(&self) -> Result<RepresentationMatrix> {
        let mut m = self.data.clone();
        let n = m.nrows() as f64;
        for j in 0..m.ncols() {
            let mean = m.column(j).sum() / n;
            for i in 0..m.nrows() {
                m[(i, j)] -= mean;
            }
        }
        normalize_rows(&m)
    }
}

/// `n x n` symmetric positive semi-definite matrix of inner products.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    data: DMatrix<f64>,
}

impl GramMatrix {
    /// Validates symmetry and positive semi-definiteness of a raw matrix.
    ///
    /// The eigenvalue check costs O(n^3); constructors that are PSD by
    /// construction ([`gram`], [`GramMatrix::all_ones`]) skip it.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        check_finite(&data)?;
        if data.nrows() != data.ncols() {
            return Err(Error::dim_mismatch(format!(
                "Gram matrix must be square, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        let mut max_dev: f64 = 0.0;
        for i in 0..data.nrows() {
            for j in (i + 1)..data.ncols() {
                max_dev = max_dev.max((data[(i, j)] - data[(j, i)]).abs());
            }
        }
        if max_dev > SYMMETRY_TOL {
            return Err(Error::NotSymmetric { max_dev });
        }
        let min_eig = crate::linalg::min_symmetric_eigenvalue(&data)?;
        if min_eig < PSD_SLACK {
            return Err(Error::NotPositiveSemiDefinite { min_eig });
        }
        Ok(Self { data })
    }

    /// The all-ones matrix (rank one, PSD by construction).
    pub fn all_ones(n: usize) -> Self {
        Self {
            data: DMatrix::from_element(n, n, 1.0),
        }
    }

    pub(crate) fn from_product_unchecked(data: DMatrix<f64>) -> Self {
        Self { data }
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// True when all diagonal entries are 1 within `tol`.
    pub fn has_unit_diagonal(&self, tol: f64) -> bool {
        (0..self.n()).all(|i| (self.data[(i, i)] - 1.0).abs() <= tol)
    }

    /// tr(K), the sum of squared row norms of any representation producing K.
    pub fn trace(&self) -> f64 {
        self.data.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.norm()
    }
}

/// Scales every row of `m` to unit Euclidean norm.
///
/// Fails with [`Error::ZeroRow`] if any row has norm below 1e-12.
pub fn normalize_rows(m: &DMatrix<f64>) -> Result<RepresentationMatrix> {
    check_finite(m)?;
    let mut out = m.clone();
    for i in 0..out.nrows() {
        let norm = out.row(i).norm();
        if norm < ZERO_ROW_TOL {
            return Err(Error::ZeroRow(i));
        }
        let inv = 1.0 / norm;
        for j in 0..out.ncols() {
            out[(i, j)] *= inv;
        }
    }
    Ok(RepresentationMatrix { data: out })
}

/// The Gram matrix R R^T of pairwise inner products.
///
/// The product is explicitly symmetrized; blocked matrix multiplication does
/// not guarantee bitwise-identical (i,j) and (j,i) entries.
pub fn gram(r: &RepresentationMatrix) -> GramMatrix {
    let mut k = r.data() * r.data().transpose();
    for i in 0..k.nrows() {
        for j in (i + 1)..k.ncols() {
            let avg = 0.5 * (k[(i, j)] + k[(j, i)]);
            k[(i, j)] = avg;
            k[(j, i)] = avg;
        }
    }
    GramMatrix::from_product_unchecked(k)
}

/// Row vector of Euclidean norms, used by tests and diagnostics.
pub fn row_norms(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.nrows(), m.row_iter().map(|r| r.norm()))
}
