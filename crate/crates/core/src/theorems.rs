//! Numerical verification of the three alignment theorems.
//!
//! Each `*_verify` function checks the premise of its theorem, measures the
//! quantities the statement relates, and returns a report whose
//! [`verdict`](Theorem1Report::verdict) is a one-line machine-readable
//! `PASS|FAIL` summary.
//!
//! Theorem 1: mixing the teacher Gram matrix with the all-ones matrix,
//! `K~ = (1 - eps) K_t + eps J_n`, keeps the CKA distance to the student at
//! most `eps` while the Gram distance grows to `eps ||K_t - J_n||_F`, which
//! can be of order `n`.
//!
//! Theorem 2: a zero projection loss forces Gram equality exactly when the
//! optimal projector has orthonormal rows; the spectral relaxation admits
//! non-orthonormal projectors whenever the student row space lies in the
//! projector's unit-singular-value subspace.
//!
//! Theorem 3: the Procrustes distance is zero if and only if the Gram
//! distance is zero.

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::svd;
use crate::metrics::{cka, d_fg, d_procrustes, ProjectionMatrix};
use crate::repr::{normalize_rows, GramMatrix, RepresentationMatrix, UNIT_NORM_TOL};
use crate::synth::{random_orthogonal, random_right_orthonormal};

/// Absolute slack on the CKA side of Theorem 1 (the claim is an inequality).
pub const THEOREM1_CKA_SLACK: f64 = 1e-9;
/// Relative tolerance on the FG side of Theorem 1 (the claim is an equality).
pub const THEOREM1_FG_RTOL: f64 = 1e-8;
/// Premise tolerance: the student Gram must equal the teacher Gram.
pub const PREMISE_FG_TOL: f64 = 1e-9;
/// Zero thresholds for the Theorem 3 biconditional.
pub const THEOREM3_PROCRUSTES_TOL: f64 = 1e-8;
pub const THEOREM3_FG_TOL: f64 = 1e-6;
/// Gram-distance threshold for Theorem 2's conclusion.
pub const THEOREM2_FG_TOL: f64 = 1e-6;
/// Residual tolerance for the spectral condition `R_s (I - P P^T) = 0`.
pub const SPECTRAL_TOL: f64 = 1e-8;

/// The Theorem 1 construction around a fixed teacher.
#[derive(Debug, Clone)]
pub struct Theorem1Instance {
    pub kt: GramMatrix,
    pub kt_tilde: GramMatrix,
    pub epsilon: f64,
    /// Predicted Gram distance `eps * ||K_t - J_n||_F`.
    ///
    /// The statement in the source material writes `sqrt(eps)` here, but its
    /// own derivation evaluates `||eps (K_t - J_n)||_F`, which scales
    /// linearly in `eps`; the linear form is the one the construction
    /// provably satisfies and the one verified here.
    pub fg_predicted: f64,
    /// Upper bound on the CKA distance (`eps` itself).
    pub cka_bound: f64,
}

/// Teacher whose rows are `s_i * u` for one random unit direction `u` and
/// random signs `s_i`: every Gram entry is exactly +-1.
///
/// This is the two-antiparallel-configurations setup, and it is the family
/// on which the Theorem 1 CKA bound actually holds for every `eps`. The
/// bound needs `||K_t||_F` close to `n`; for a spread teacher (say Gaussian
/// unit rows) the all-ones mixture is visible to CKA beyond `eps`, which
/// `theorem1_cka_bound_needs_sign_structure` below pins down.
pub fn sign_structured_teacher(n: usize, d_t: usize, seed: u64) -> RepresentationMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut direction = DMatrix::from_fn(d_t, 1, |_, _| rng.sample::<f64, _>(StandardNormal));
    let norm = direction.norm();
    direction /= norm;
    let mut data = DMatrix::zeros(n, d_t);
    for i in 0..n {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        for j in 0..d_t {
            data[(i, j)] = sign * direction[(j, 0)];
        }
    }
    RepresentationMatrix::new(data).expect("sign-structured teacher is finite")
}

/// Builds `K~ = (1 - eps) K_t + eps J_n` from a unit-norm teacher.
///
/// The mixture of two PSD matrices with non-negative weights is PSD, and the
/// unit diagonal survives: `(1 - eps) + eps = 1`. Both facts are re-checked
/// numerically by the [`GramMatrix`] constructor.
pub fn theorem1_construct(rt: &RepresentationMatrix, epsilon: f64) -> Result<Theorem1Instance> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidConfig(format!(
            "epsilon must lie in [0, 1], got {epsilon}"
        )));
    }
    if !rt.has_unit_rows(UNIT_NORM_TOL) {
        return Err(Error::InvalidConfig(
            "theorem 1 requires unit-norm teacher rows".into(),
        ));
    }
    let kt = crate::repr::gram(rt);
    let n = kt.n();
    let ones = DMatrix::from_element(n, n, 1.0);
    let mixed = kt.data() * (1.0 - epsilon) + &ones * epsilon;
    let kt_tilde = GramMatrix::new(mixed)?;
    let fg_predicted = epsilon * (kt.data() - ones).norm();
    Ok(Theorem1Instance {
        kt,
        kt_tilde,
        epsilon,
        fg_predicted,
        cka_bound: epsilon,
    })
}

#[derive(Debug, Clone)]
pub struct Theorem1Report {
    pub epsilon: f64,
    pub n: usize,
    pub cka_distance: f64,
    pub cka_bound: f64,
    pub fg_distance: f64,
    pub fg_predicted: f64,
    /// `||K~||_F >= (1 - eps) ||K_t||_F - eps n`.
    pub norm_identity_holds: bool,
    pub pass: bool,
}

impl Theorem1Report {
    pub fn verdict(&self) -> String {
        format!(
            "{} theorem1 eps={} n={} cka={:.6e} cka_bound={:.6e} fg={:.6e} fg_predicted={:.6e} norm_identity={}",
            if self.pass { "PASS" } else { "FAIL" },
            self.epsilon,
            self.n,
            self.cka_distance,
            self.cka_bound,
            self.fg_distance,
            self.fg_predicted,
            self.norm_identity_holds,
        )
    }
}

/// Checks both Theorem 1 claims against a student Gram matrix equal to the
/// teacher's (the theorem premise).
pub fn theorem1_verify(inst: &Theorem1Instance, ks: &GramMatrix) -> Result<Theorem1Report> {
    let premise = d_fg(&inst.kt, ks)?.value;
    if premise > PREMISE_FG_TOL {
        return Err(Error::PremiseViolated(format!(
            "theorem 1 requires K_s = K_t; measured FG distance {premise:.3e}"
        )));
    }
    let cka_distance = 1.0 - cka(&inst.kt_tilde, ks)?;
    let fg_distance = d_fg(&inst.kt_tilde, ks)?.value;
    let n = inst.kt.n();
    let lhs = inst.kt_tilde.frobenius_norm();
    let rhs = (1.0 - inst.epsilon) * inst.kt.frobenius_norm() - inst.epsilon * n as f64;
    let norm_identity_holds = lhs >= rhs - 1e-9;
    let cka_ok = cka_distance <= inst.cka_bound + THEOREM1_CKA_SLACK;
    let fg_ok = (fg_distance - inst.fg_predicted).abs()
        <= THEOREM1_FG_RTOL * inst.fg_predicted.max(1.0);
    Ok(Theorem1Report {
        epsilon: inst.epsilon,
        n,
        cka_distance,
        cka_bound: inst.cka_bound,
        fg_distance,
        fg_predicted: inst.fg_predicted,
        norm_identity_holds,
        pass: cka_ok && fg_ok && norm_identity_holds,
    })
}

#[derive(Debug, Clone)]
pub struct Theorem2Report {
    pub premise_residual: f64,
    pub right_orthonormal: bool,
    pub fg_distance: f64,
    /// Right-orthonormal projector must force the Gram distance to zero.
    pub pass: bool,
}

impl Theorem2Report {
    pub fn verdict(&self) -> String {
        format!(
            "{} theorem2 right_orthonormal={} premise_residual={:.6e} fg={:.6e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.right_orthonormal,
            self.premise_residual,
            self.fg_distance,
        )
    }
}

/// Checks the forward direction of Theorem 2 on a zero-projection-loss pair.
pub fn theorem2_verify(
    rt: &RepresentationMatrix,
    rs: &RepresentationMatrix,
    p: &ProjectionMatrix,
) -> Result<Theorem2Report> {
    let premise_residual = (rs.data() * p.data() - rt.data()).norm();
    if premise_residual >= PREMISE_FG_TOL {
        return Err(Error::PremiseViolated(format!(
            "theorem 2 requires ||R_s P - R_t||_F < 1e-9; measured {premise_residual:.3e}"
        )));
    }
    let right_orthonormal = p.is_right_orthonormal();
    let fg_distance = d_fg(&crate::repr::gram(rt), &crate::repr::gram(rs))?.value;
    let pass = !right_orthonormal || fg_distance < THEOREM2_FG_TOL;
    Ok(Theorem2Report {
        premise_residual,
        right_orthonormal,
        fg_distance,
        pass,
    })
}

/// Direct evaluation of the spectral condition `||R_s (I - P P^T)||_F < 1e-8`.
pub fn spectral_condition(rs: &RepresentationMatrix, p: &ProjectionMatrix) -> bool {
    let d_s = p.d_s();
    let defect = DMatrix::identity(d_s, d_s) - p.data() * p.data().transpose();
    (rs.data() * defect).norm() < SPECTRAL_TOL
}

/// Cross-check of [`spectral_condition`] through the SVD of `P`: the rows of
/// `R_s` must lie in the span of the left singular vectors whose singular
/// value is within 1e-8 of 1.
pub fn spectral_condition_svd(rs: &RepresentationMatrix, p: &ProjectionMatrix) -> Result<bool> {
    let f = svd(p.data())?;
    let unit_cols: Vec<usize> = f
        .s
        .iter()
        .enumerate()
        .filter(|(_, &s)| (s - 1.0).abs() <= 1e-8)
        .map(|(j, _)| j)
        .collect();
    if unit_cols.is_empty() {
        return Ok(rs.data().norm() < SPECTRAL_TOL);
    }
    let basis = f.u.select_columns(unit_cols.iter());
    let projected = (rs.data() * &basis) * basis.transpose();
    Ok((rs.data() - projected).norm() < SPECTRAL_TOL)
}

#[derive(Debug, Clone)]
pub struct Theorem3Report {
    pub procrustes_distance: f64,
    pub fg_distance: f64,
    pub procrustes_zero: bool,
    pub fg_zero: bool,
    /// The two zero predicates must agree.
    pub pass: bool,
}

impl Theorem3Report {
    pub fn verdict(&self) -> String {
        format!(
            "{} theorem3 procrustes={:.6e} fg={:.6e} biconditional={}",
            if self.pass { "PASS" } else { "FAIL" },
            self.procrustes_distance,
            self.fg_distance,
            self.procrustes_zero == self.fg_zero,
        )
    }
}

/// Measures both distances and evaluates the zero-set biconditional.
pub fn theorem3_verify(
    rt: &RepresentationMatrix,
    rs: &RepresentationMatrix,
) -> Result<Theorem3Report> {
    let procrustes_distance = d_procrustes(rt, rs)?.value;
    let fg_distance = d_fg(&crate::repr::gram(rt), &crate::repr::gram(rs))?.value;
    let procrustes_zero = procrustes_distance < THEOREM3_PROCRUSTES_TOL;
    let fg_zero = fg_distance < THEOREM3_FG_TOL;
    Ok(Theorem3Report {
        procrustes_distance,
        fg_distance,
        procrustes_zero,
        fg_zero,
        pass: procrustes_zero == fg_zero,
    })
}

#[derive(Debug, Clone)]
pub struct PsdLemmasReport {
    pub min_eigenvalue: f64,
    pub trace_inner: f64,
    pub pass: bool,
}

impl PsdLemmasReport {
    pub fn verdict(&self) -> String {
        format!(
            "{} psd_lemmas min_eig={:.6e} trace_inner={:.6e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.min_eigenvalue,
            self.trace_inner,
        )
    }
}

/// Conic combinations of PSD matrices stay PSD, and `tr(A^T B) >= 0` for PSD
/// `A`, `B`. PSD-ness of the arguments is enforced by [`GramMatrix`]
/// construction, so a non-PSD input is rejected before this check runs.
pub fn psd_lemmas_check(
    a: &GramMatrix,
    b: &GramMatrix,
    alpha: f64,
    beta: f64,
) -> Result<PsdLemmasReport> {
    if alpha <= 0.0 || beta <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "alpha and beta must be > 0, got {alpha} and {beta}"
        )));
    }
    if a.n() != b.n() {
        return Err(Error::dim_mismatch(format!(
            "PSD lemma check requires equal sizes, got {} and {}",
            a.n(),
            b.n()
        )));
    }
    let combo = a.data() * alpha + b.data() * beta;
    let min_eigenvalue = crate::linalg::min_symmetric_eigenvalue(&combo)?;
    let trace_inner: f64 = a
        .data()
        .iter()
        .zip(b.data().iter())
        .map(|(x, y)| x * y)
        .sum();
    Ok(PsdLemmasReport {
        min_eigenvalue,
        trace_inner,
        pass: min_eigenvalue >= -1e-8 && trace_inner >= -1e-10,
    })
}

/// Builds the spectral-relaxation counterexample for Theorem 2: a projector
/// `P = U diag(1, .., 1, lambda) V^T` with `lambda != 1`, and a student whose
/// rows live in the span of the unit-singular-value left singular vectors.
///
/// The pair satisfies the zero-loss premise with `R_t = R_s P`, passes the
/// spectral condition, and fails `is_right_orthonormal`.
pub fn unit_eigenspace_instance(
    n: usize,
    d_s: usize,
    d_t: usize,
    lambda: f64,
    seed: u64,
) -> Result<(RepresentationMatrix, RepresentationMatrix, ProjectionMatrix)> {
    assert!(d_s >= 2 && d_s <= d_t, "need 2 <= d_s <= d_t");
    let u = random_orthogonal(d_s, seed);
    let v = random_right_orthonormal(d_s, d_t, seed.wrapping_add(1)).transpose();
    let mut sigma = DMatrix::identity(d_s, d_s);
    sigma[(d_s - 1, d_s - 1)] = lambda;
    let p = ProjectionMatrix::new(&u * sigma * v.transpose())?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let coeffs = DMatrix::from_fn(n, d_s - 1, |_, _| rng.sample::<f64, _>(StandardNormal));
    let basis = u.columns(0, d_s - 1);
    let rs = normalize_rows(&(coeffs * basis.transpose()))?;
    let rt = RepresentationMatrix::new(rs.data() * p.data())?;
    Ok((rt, rs, p))
}
