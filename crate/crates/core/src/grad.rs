//! Analytic gradients of each loss with respect to the student matrix.
//!
//! Losses are optimized in their smooth forms: squared Frobenius norms for
//! the Gram and projection objectives, the squared kernel form for
//! Procrustes, and `1 - CKA`. Every analytic gradient here is validated
//! against [`finite_diff`] (central differences) in the test suites; the
//! oracle stays independent of the analytic path.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::svd;
use crate::metrics::{MetricKind, ProjectionMatrix, ZERO_GRAM_TOL};
use crate::repr::RepresentationMatrix;

/// Default central-difference step; balances truncation and rounding error.
pub const DEFAULT_FD_STEP: f64 = 1e-5;
/// Smallest singular value of `R_s^T R_t` below which the nuclear-norm
/// gradient is refused instead of silently returning a subgradient.
pub const NEAR_SINGULAR_TOL: f64 = 1e-10;

/// Gradient of one loss evaluation.
#[derive(Debug, Clone)]
pub struct LossGradient {
    /// Same shape as the student matrix.
    pub d_student: DMatrix<f64>,
    /// Same shape as the projection matrix; present for LinProj only.
    pub d_projection: Option<DMatrix<f64>>,
    pub loss_value: f64,
}

fn check_same_n(rt: &RepresentationMatrix, rs: &RepresentationMatrix) -> Result<()> {
    if rt.n() != rs.n() {
        return Err(Error::dim_mismatch(format!(
            "loss requires the same number of rows, got {} and {}",
            rt.n(),
            rs.n()
        )));
    }
    Ok(())
}

// Raw loss evaluators. These take the student as a plain matrix so the
// finite-difference oracle can perturb entries directly.

pub fn fg_loss(rt: &DMatrix<f64>, rs: &DMatrix<f64>) -> f64 {
    let kt = rt * rt.transpose();
    let ks = rs * rs.transpose();
    (kt - ks).norm_squared()
}

pub fn procrustes_loss(rt: &DMatrix<f64>, rs: &DMatrix<f64>) -> f64 {
    let cross = rs.transpose() * rt;
    let nuc: f64 = cross
        .svd_unordered(false, false)
        .singular_values
        .iter()
        .sum();
    rt.norm_squared() + rs.norm_squared() - 2.0 * nuc
}

pub fn cka_loss(rt: &DMatrix<f64>, rs: &DMatrix<f64>) -> Result<f64> {
    let kt = rt * rt.transpose();
    let ks = rs * rs.transpose();
    let btt = kt.norm_squared();
    let css = ks.norm_squared();
    if btt < ZERO_GRAM_TOL || css < ZERO_GRAM_TOL {
        return Err(Error::ZeroGram);
    }
    let a: f64 = kt.iter().zip(ks.iter()).map(|(x, y)| x * y).sum();
    Ok(1.0 - a / (btt.sqrt() * css.sqrt()))
}

pub fn linproj_loss(rt: &DMatrix<f64>, rs: &DMatrix<f64>, p: &DMatrix<f64>) -> f64 {
    (rs * p - rt).norm_squared()
}

/// Gradient of `||K_t - K_s||_F^2`: `-4 (K_t - K_s) R_s`.
pub fn grad_fg(rt: &RepresentationMatrix, rs: &RepresentationMatrix) -> Result<LossGradient> {
    check_same_n(rt, rs)?;
    let kt = rt.data() * rt.data().transpose();
    let ks = rs.data() * rs.data().transpose();
    let diff = kt - ks;
    let loss_value = diff.norm_squared();
    let d_student = -4.0 * (&diff * rs.data());
    Ok(LossGradient {
        d_student,
        d_projection: None,
        loss_value,
    })
}

/// Gradient of the squared kernel-form Procrustes distance.
///
/// With `R_s^T R_t = U diag(S) V^T`, the nuclear-norm term differentiates to
/// `R_t V U^T`, giving `2 R_s - 2 R_t V U^T`. Exact only away from a
/// rank-deficient cross matrix; a spectrum touching zero raises
/// [`Error::NearSingular`] so callers never mistake a subgradient for the
/// gradient.
pub fn grad_procrustes(
    rt: &RepresentationMatrix,
    rs: &RepresentationMatrix,
) -> Result<LossGradient> {
    check_same_n(rt, rs)?;
    let cross = rs.data().transpose() * rt.data();
    let f = svd(&cross)?;
    let sigma_min = f.s.iter().cloned().fold(f64::INFINITY, f64::min);
    if sigma_min <= NEAR_SINGULAR_TOL {
        return Err(Error::NearSingular { sigma_min });
    }
    let nuc: f64 = f.s.iter().sum();
    let loss_value = rt.data().norm_squared() + rs.data().norm_squared() - 2.0 * nuc;
    let d_student = 2.0 * rs.data() - 2.0 * (rt.data() * &f.v * f.u.transpose());
    Ok(LossGradient {
        d_student,
        d_projection: None,
        loss_value,
    })
}

/// Like [`grad_procrustes`] but returns the `U V^T` subgradient choice when
/// the cross-matrix spectrum touches zero instead of failing.
///
/// The returned direction depends on the SVD's gauge in the null space, so
/// it must never be compared against finite differences; it is offered for
/// callers that accept a subgradient where the exact gradient is undefined.
pub fn grad_procrustes_subgradient(
    rt: &RepresentationMatrix,
    rs: &RepresentationMatrix,
) -> Result<LossGradient> {
    check_same_n(rt, rs)?;
    let cross = rs.data().transpose() * rt.data();
    let f = svd(&cross)?;
    let nuc: f64 = f.s.iter().sum();
    let loss_value = rt.data().norm_squared() + rs.data().norm_squared() - 2.0 * nuc;
    let d_student = 2.0 * rs.data() - 2.0 * (rt.data() * &f.v * f.u.transpose());
    Ok(LossGradient {
        d_student,
        d_projection: None,
        loss_value,
    })
}

/// Gradient of `1 - CKA`.
///
/// With `a = tr(K_t K_s)`, `b = ||K_t||_F`, `c = ||K_s||_F`, the quotient
/// rule gives `(2 / (b c)) [ (a / c^2) K_s R_s - K_t R_s ]`.
pub fn grad_cka(rt: &RepresentationMatrix, rs: &RepresentationMatrix) -> Result<LossGradient> {
    check_same_n(rt, rs)?;
    let kt = rt.data() * rt.data().transpose();
    let ks = rs.data() * rs.data().transpose();
    let btt = kt.norm_squared();
    let css = ks.norm_squared();
    if btt < ZERO_GRAM_TOL || css < ZERO_GRAM_TOL {
        return Err(Error::ZeroGram);
    }
    let b = btt.sqrt();
    let c = css.sqrt();
    let a: f64 = kt.iter().zip(ks.iter()).map(|(x, y)| x * y).sum();
    let loss_value = 1.0 - a / (b * c);
    let scale = 2.0 / (b * c);
    let d_student = scale * ((a / (c * c)) * (&ks * rs.data()) - (&kt * rs.data()));
    Ok(LossGradient {
        d_student,
        d_projection: None,
        loss_value,
    })
}

/// Gradients of `||R_s P - R_t||_F^2` in both the student and the projection.
pub fn grad_linproj(
    rt: &RepresentationMatrix,
    rs: &RepresentationMatrix,
    p: &ProjectionMatrix,
) -> Result<LossGradient> {
    check_same_n(rt, rs)?;
    if p.d_s() != rs.dim() || p.d_t() != rt.dim() {
        return Err(Error::dim_mismatch(format!(
            "projection is {}x{} but student dim is {} and teacher dim is {}",
            p.d_s(),
            p.d_t(),
            rs.dim(),
            rt.dim()
        )));
    }
    let residual = rs.data() * p.data() - rt.data();
    let loss_value = residual.norm_squared();
    let d_student = 2.0 * (&residual * p.data().transpose());
    let d_projection = 2.0 * (rs.data().transpose() * &residual);
    Ok(LossGradient {
        d_student,
        d_projection: Some(d_projection),
        loss_value,
    })
}

/// Loss dispatcher shared by the optimizer and the gradient checker.
///
/// `p` is required for [`MetricKind::LinProj`] and ignored otherwise.
pub fn loss_gradient(
    kind: MetricKind,
    rt: &RepresentationMatrix,
    rs: &RepresentationMatrix,
    p: Option<&ProjectionMatrix>,
) -> Result<LossGradient> {
    match kind {
        MetricKind::Fg => grad_fg(rt, rs),
        MetricKind::Procrustes => grad_procrustes(rt, rs),
        MetricKind::CkaDist => grad_cka(rt, rs),
        MetricKind::LinProj => {
            let p = p.ok_or_else(|| {
                Error::InvalidConfig("linproj gradient requires a projection matrix".into())
            })?;
            grad_linproj(rt, rs, p)
        }
    }
}

/// Central finite differences of `loss` with respect to every entry of `at`.
///
/// `step` must lie in `[1e-7, 1e-3]`. Entries are evaluated in parallel; the
/// result depends only on `(loss, at, step)`.
pub fn finite_diff<F>(loss: F, at: &DMatrix<f64>, step: f64) -> DMatrix<f64>
where
    F: Fn(&DMatrix<f64>) -> f64 + Sync,
{
    assert!(
        (1e-7..=1e-3).contains(&step),
        "finite-difference step {step} outside [1e-7, 1e-3]"
    );
    let (rows, cols) = at.shape();
    let entries: Vec<f64> = (0..rows * cols)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx % rows, idx / rows);
            let mut plus = at.clone();
            plus[(i, j)] += step;
            let mut minus = at.clone();
            minus[(i, j)] -= step;
            (loss(&plus) - loss(&minus)) / (2.0 * step)
        })
        .collect();
    DMatrix::from_vec(rows, cols, entries)
}

/// `||g_a - g_fd||_F / max(||g_fd||_F, 1e-12)`, the acceptance-gate error.
pub fn relative_gradient_error(analytic: &DMatrix<f64>, fd: &DMatrix<f64>) -> f64 {
    (analytic - fd).norm() / fd.norm().max(1e-12)
}
