//! The four feature-alignment distances.
//!
//! * Feature Gram distance: Frobenius norm of the Gram difference.
//! * Learned-projection distance: least-squares residual of the best linear
//!   map from student to teacher space.
//! * CKA distance: one minus linear centered-kernel-alignment similarity.
//! * Procrustes distance: kernel form `tr(K_t) + tr(K_s) - 2 ||R_s^T R_t||_*`
//!   (square root, clamped at zero), plus the direct orthogonal-alignment
//!   form for equal dimensions.
//!
//! Gram-based entry points take [`GramMatrix`]; where the distance is cheaper
//! or only expressible on representations, entry points take
//! [`RepresentationMatrix`]. The `*_from_reps` variants evaluate the same
//! quantities through `d x d` cross products instead of `n x n` Gram
//! matrices, which is what the optimizer records at trace points.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{nuclear_norm, pseudoinverse, svd};
use crate::repr::{GramMatrix, RepresentationMatrix};

/// Tolerance for the right-orthonormality predicate `P P^T = I`.
pub const RIGHT_ORTHONORMAL_TOL: f64 = 1e-8;
/// CKA is rejected when `tr(K K)` falls below this for either argument.
pub const ZERO_GRAM_TOL: f64 = 1e-24;

/// Which distance a value was computed with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricKind {
    Fg,
    LinProj,
    CkaDist,
    Procrustes,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [
        MetricKind::Fg,
        MetricKind::LinProj,
        MetricKind::CkaDist,
        MetricKind::Procrustes,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MetricKind::Fg => "fg",
            MetricKind::LinProj => "linproj",
            MetricKind::CkaDist => "cka-dist",
            MetricKind::Procrustes => "procrustes",
        }
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fg" => Ok(MetricKind::Fg),
            "linproj" => Ok(MetricKind::LinProj),
            "cka-dist" => Ok(MetricKind::CkaDist),
            "procrustes" => Ok(MetricKind::Procrustes),
            other => Err(Error::InvalidConfig(format!(
                "unknown metric `{other}` (expected fg, linproj, cka-dist, or procrustes)"
            ))),
        }
    }
}

/// A non-negative distance value tagged with its kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricValue {
    pub kind: MetricKind,
    pub value: f64,
}

impl MetricValue {
    /// Clamps rounding-level negatives (>= -1e-9) to zero.
    fn new(kind: MetricKind, value: f64) -> Self {
        debug_assert!(value >= -1e-9, "{kind} produced {value}");
        debug_assert!(
            kind != MetricKind::CkaDist || value <= 1.0 + 1e-9,
            "cka-dist out of range: {value}"
        );
        Self {
            kind,
            value: value.max(0.0),
        }
    }
}

/// A learned `d_s x d_t` linear map from student to teacher space.
///
/// The paper's projection multiplies on the right of the student matrix, so
/// the consistent shape is `d_s x d_t` and `R_s P` lands in teacher space.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    data: DMatrix<f64>,
}

impl ProjectionMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::EmptyMatrix {
                rows: data.nrows(),
                cols: data.ncols(),
            });
        }
        if let Some((row, col)) = data
            .iter()
            .position(|v| !v.is_finite())
            .map(|idx| (idx % data.nrows(), idx / data.nrows()))
        {
            return Err(Error::NonFinite { row, col });
        }
        Ok(Self { data })
    }

    /// Student-side dimension (rows).
    pub fn d_s(&self) -> usize {
        self.data.nrows()
    }

    /// Teacher-side dimension (columns).
    pub fn d_t(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.data
    }

    /// True when `P P^T = I` within [`RIGHT_ORTHONORMAL_TOL`].
    pub fn is_right_orthonormal(&self) -> bool {
        let ppt = &self.data * self.data.transpose();
        let d = self.d_s();
        let mut max_dev: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                max_dev = max_dev.max((ppt[(i, j)] - target).abs());
            }
        }
        max_dev <= RIGHT_ORTHONORMAL_TOL
    }
}

fn check_same_n(a: usize, b: usize, op: &str) -> Result<()> {
    if a != b {
        return Err(Error::dim_mismatch(format!(
            "{op} requires the same number of rows, got {a} and {b}"
        )));
    }
    Ok(())
}

/// tr(A B) for symmetric B, computed entrywise in O(n^2).
fn trace_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Feature Gram distance `||K_t - K_s||_F`.
pub fn d_fg(kt: &GramMatrix, ks: &GramMatrix) -> Result<MetricValue> {
    check_same_n(kt.n(), ks.n(), "feature Gram distance")?;
    Ok(MetricValue::new(
        MetricKind::Fg,
        (kt.data() - ks.data()).norm(),
    ))
}

/// Linear CKA similarity `tr(K_t K_s) / (||K_t||_F ||K_s||_F)` in [0, 1].
pub fn cka(kt: &GramMatrix, ks: &GramMatrix) -> Result<f64> {
    check_same_n(kt.n(), ks.n(), "CKA")?;
    let btt = trace_product(kt.data(), kt.data());
    let css = trace_product(ks.data(), ks.data());
    if btt < ZERO_GRAM_TOL || css < ZERO_GRAM_TOL {
        return Err(Error::ZeroGram);
    }
    let a = trace_product(kt.data(), ks.data());
    Ok(a / (btt.sqrt() * css.sqrt()))
}

/// CKA distance `1 - CKA`.
pub fn d_cka(kt: &GramMatrix, ks: &GramMatrix) -> Result<MetricValue> {
    Ok(MetricValue::new(MetricKind::CkaDist, 1.0 - cka(kt, ks)?))
}

/// Squared Procrustes distance in kernel form, before the clamped root.
pub fn procrustes_sq(rt: &RepresentationMatrix, rs: &RepresentationMatrix) -> Result<f64> {
    let trace_t = rt.data().norm_squared();
    let trace_s = rs.data().norm_squared();
    let cross = rs.data().transpose() * rt.data();
    Ok(trace_t + trace_s - 2.0 * nuclear_norm(&cross)?)
}

/// Squared kernel-form Procrustes distance, evaluated without cancellation.
///
/// With `R_s^T R_t = U diag(S) V^T` (thin factors, `U^T U = V^T V = I`) the
/// kernel form regroups exactly into three non-negative terms:
///
/// ```text
/// D^2 = ||R_s U - R_t V||_F^2 + ||R_s - R_s U U^T||_F^2 + ||R_t - R_t V V^T||_F^2
/// ```
///
/// The plain form subtracts two `tr(K)`-sized quantities and loses ~7 digits
/// near zero; this regrouping keeps equal-Gram pairs at the 1e-13 scale.
pub fn procrustes_sq_stable(
    rt: &RepresentationMatrix,
    rs: &RepresentationMatrix,
) -> Result<f64> {
    let cross = rs.data().transpose() * rt.data();
    let f = svd(&cross)?;
    let aligned = (rs.data() * &f.u - rt.data() * &f.v).norm_squared();
    let defect_s = (rs.data() - (rs.data() * &f.u) * f.u.transpose()).norm_squared();
    let defect_t = (rt.data() - (rt.data() * &f.v) * f.v.transpose()).norm_squared();
    Ok(aligned + defect_s + defect_t)
}

/// Procrustes distance, kernel form (valid for mismatched dimensions).
pub fn d_procrustes(rt: &RepresentationMatrix, rs: &RepresentationMatrix) -> Result<MetricValue> {
    check_same_n(rt.n(), rs.n(), "Procrustes distance")?;
    let sq = procrustes_sq_stable(rt, rs)?;
    Ok(MetricValue::new(MetricKind::Procrustes, sq.max(0.0).sqrt()))
}

/// Procrustes distance by explicitly solving for the optimal rotation.
///
/// Requires equal dimensions; the minimizer of `||R_s Q - R_t||_F` over
/// orthogonal `Q` is `U V^T` with `R_s^T R_t = U diag(S) V^T`.
pub fn d_procrustes_direct(
    rt: &RepresentationMatrix,
    rs: &RepresentationMatrix,
) -> Result<MetricValue> {
    check_same_n(rt.n(), rs.n(), "Procrustes distance")?;
    if rt.dim() != rs.dim() {
        return Err(Error::dim_mismatch(format!(
            "direct Procrustes requires equal dimensions, got d_t={} and d_s={}",
            rt.dim(),
            rs.dim()
        )));
    }
    let cross = rs.data().transpose() * rt.data();
    let f = svd(&cross)?;
    let q = &f.u * f.v.transpose();
    let residual = (rs.data() * q - rt.data()).norm();
    Ok(MetricValue::new(MetricKind::Procrustes, residual))
}

/// Least-squares optimal projection `P* = pinv(R_s) R_t` and its residual.
pub fn linproj_closed_form(
    rt: &RepresentationMatrix,
    rs: &RepresentationMatrix,
) -> Result<(ProjectionMatrix, MetricValue)> {
    check_same_n(rt.n(), rs.n(), "learned projection distance")?;
    let p = pseudoinverse(rs.data())? * rt.data();
    let residual = (rs.data() * &p - rt.data()).norm();
    Ok((
        ProjectionMatrix::new(p)?,
        MetricValue::new(MetricKind::LinProj, residual),
    ))
}

/// The projection objective `||R_s P - R_t||_F` at a fixed `P`.
pub fn d_linproj_value(
    rt: &RepresentationMatrix,
    rs: &RepresentationMatrix,
    p: &ProjectionMatrix,
) -> Result<f64> {
    check_same_n(rt.n(), rs.n(), "learned projection objective")?;
    if p.d_s() != rs.dim() || p.d_t() != rt.dim() {
        return Err(Error::dim_mismatch(format!(
            "projection is {}x{} but student dim is {} and teacher dim is {}",
            p.d_s(),
            p.d_t(),
            rs.dim(),
            rt.dim()
        )));
    }
    Ok((rs.data() * p.data() - rt.data()).norm())
}

/// `||K_t - K_s||_F^2` through `d x d` cross matrices.
///
/// Uses `tr(K_t K_s) = ||R_s^T R_t||_F^2`, avoiding the `n x n` Gram
/// matrices entirely; at trace-recording scale (`n >> d`) this is the only
/// affordable route.
pub fn fg_sq_from_reps(rt: &RepresentationMatrix, rs: &RepresentationMatrix) -> Result<f64> {
    check_same_n(rt.n(), rs.n(), "feature Gram distance")?;
    let tt = (rt.data().transpose() * rt.data()).norm_squared();
    let ss = (rs.data().transpose() * rs.data()).norm_squared();
    let ts = (rs.data().transpose() * rt.data()).norm_squared();
    Ok((tt - 2.0 * ts + ss).max(0.0))
}

/// Feature Gram distance evaluated from representations.
pub fn d_fg_from_reps(rt: &RepresentationMatrix, rs: &RepresentationMatrix) -> Result<MetricValue> {
    Ok(MetricValue::new(
        MetricKind::Fg,
        fg_sq_from_reps(rt, rs)?.sqrt(),
    ))
}

/// CKA similarity evaluated from representations.
pub fn cka_from_reps(rt: &RepresentationMatrix, rs: &RepresentationMatrix) -> Result<f64> {
    check_same_n(rt.n(), rs.n(), "CKA")?;
    let tt = (rt.data().transpose() * rt.data()).norm_squared();
    let ss = (rs.data().transpose() * rs.data()).norm_squared();
    if tt < ZERO_GRAM_TOL || ss < ZERO_GRAM_TOL {
        return Err(Error::ZeroGram);
    }
    let ts = (rs.data().transpose() * rt.data()).norm_squared();
    Ok(ts / (tt.sqrt() * ss.sqrt()))
}

/// CKA distance evaluated from representations.
pub fn d_cka_from_reps(
    rt: &RepresentationMatrix,
    rs: &RepresentationMatrix,
) -> Result<MetricValue> {
    Ok(MetricValue::new(
        MetricKind::CkaDist,
        1.0 - cka_from_reps(rt, rs)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repr::{gram, normalize_rows};
    use nalgebra::dmatrix;

    fn antipodal() -> RepresentationMatrix {
        normalize_rows(&dmatrix![1.0, 0.0; -1.0, 0.0]).unwrap()
    }

    fn duplicated() -> RepresentationMatrix {
        normalize_rows(&dmatrix![1.0, 0.0; 1.0, 0.0]).unwrap()
    }

    #[test]
    fn fg_zero_on_identical() {
        let k = gram(&antipodal());
        assert_eq!(d_fg(&k, &k).unwrap().value, 0.0);
    }

    #[test]
    fn fg_antipodal_vs_duplicated_is_sqrt8() {
        let v = d_fg(&gram(&antipodal()), &gram(&duplicated())).unwrap();
        assert!((v.value - 8.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn fg_identity_vs_ones_is_sqrt2() {
        let kt = gram(&normalize_rows(&DMatrix::identity(2, 2)).unwrap());
        let ks = gram(&duplicated());
        let v = d_fg(&kt, &ks).unwrap();
        assert!((v.value - 2.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cka_identical_is_one() {
        let k = gram(&antipodal());
        assert!((cka(&k, &k).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cka_antipodal_vs_duplicated_is_zero() {
        let c = cka(&gram(&antipodal()), &gram(&duplicated())).unwrap();
        assert!(c.abs() < 1e-12);
        let d = d_cka(&gram(&antipodal()), &gram(&duplicated())).unwrap();
        assert!((d.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cka_scale_invariant() {
        let k = gram(&antipodal());
        let scaled = GramMatrix::new(k.data() * 3.5).unwrap();
        assert!((cka(&k, &scaled).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cka_rejects_zero_gram() {
        let k = gram(&antipodal());
        let zero = GramMatrix::new(DMatrix::zeros(2, 2)).unwrap();
        assert!(matches!(cka(&k, &zero), Err(Error::ZeroGram)));
    }

    #[test]
    fn procrustes_antipodal_vs_duplicated_is_two() {
        // R_s^T R_t = 0, so D^2 = 2 + 2 - 0 = 4.
        let v = d_procrustes(&antipodal(), &duplicated()).unwrap();
        assert!((v.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn procrustes_zero_on_same_input() {
        let rt = normalize_rows(&dmatrix![0.6, 0.8; 1.0, 0.0; 0.0, 1.0]).unwrap();
        let v = d_procrustes(&rt, &rt).unwrap();
        assert!(v.value < 1e-7, "got {}", v.value);
    }

    #[test]
    fn direct_procrustes_rejects_dim_mismatch() {
        let rt = normalize_rows(&dmatrix![1.0, 0.0, 0.0; 0.0, 1.0, 0.0]).unwrap();
        let rs = antipodal();
        assert!(matches!(
            d_procrustes_direct(&rt, &rs),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn linproj_identity_fit() {
        let rt = normalize_rows(&dmatrix![0.6, 0.8; 0.0, 1.0]).unwrap();
        let (p, v) = linproj_closed_form(&rt, &rt).unwrap();
        assert!((p.data() - DMatrix::identity(2, 2)).norm() < 1e-10);
        assert!(v.value < 1e-10);
    }

    #[test]
    fn linproj_rank_deficient_antipodal_residual() {
        // Identical student rows cannot separate antipodal targets; the
        // least-squares fit maps both to the midpoint (zero), leaving
        // residual ||R_t||_F = sqrt(2).
        let (p, v) = linproj_closed_form(&antipodal(), &duplicated()).unwrap();
        assert!(p.data().norm() < 1e-12);
        assert!((v.value - 2.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn linproj_value_at_zero_projection_is_sqrt_n() {
        let rt = normalize_rows(&dmatrix![1.0, 0.0; 0.0, 1.0; 0.6, 0.8]).unwrap();
        let p = ProjectionMatrix::new(DMatrix::zeros(2, 2)).unwrap();
        let v = d_linproj_value(&rt, &rt, &p).unwrap();
        assert!((v - 3.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn stable_and_plain_procrustes_forms_agree() {
        for seed in 0..20 {
            let rt = crate::synth::random_unit_rows(12, 6, seed);
            let rs = crate::synth::random_unit_rows(12, 4, seed + 100);
            let plain = procrustes_sq(&rt, &rs).unwrap();
            let stable = procrustes_sq_stable(&rt, &rs).unwrap();
            assert!(
                (plain - stable).abs() < 1e-9,
                "seed {seed}: plain {plain} vs stable {stable}"
            );
        }
    }

    #[test]
    fn from_reps_routes_match_gram_routes() {
        let rt = normalize_rows(&dmatrix![0.6, 0.8, 0.0; 0.0, 1.0, 0.0; 0.0, 0.0, 1.0]).unwrap();
        let rs = normalize_rows(&dmatrix![1.0, 0.0; 0.5, 0.5; -0.3, 0.7]).unwrap();
        let kt = gram(&rt);
        let ks = gram(&rs);
        let fg_a = d_fg(&kt, &ks).unwrap().value;
        let fg_b = d_fg_from_reps(&rt, &rs).unwrap().value;
        assert!((fg_a - fg_b).abs() <= 1e-9 * fg_a.max(1.0));
        let cka_a = cka(&kt, &ks).unwrap();
        let cka_b = cka_from_reps(&rt, &rs).unwrap();
        assert!((cka_a - cka_b).abs() < 1e-9);
    }

    #[test]
    fn right_orthonormal_predicate() {
        let p = ProjectionMatrix::new(dmatrix![1.0, 0.0, 0.0; 0.0, 1.0, 0.0]).unwrap();
        assert!(p.is_right_orthonormal());
        let q = ProjectionMatrix::new(dmatrix![2.0, 0.0, 0.0; 0.0, 1.0, 0.0]).unwrap();
        assert!(!q.is_right_orthonormal());
    }

    #[test]
    fn metric_kind_round_trips_strings() {
        for kind in MetricKind::ALL {
            assert_eq!(kind.as_str().parse::<MetricKind>().unwrap(), kind);
        }
    }
}
