//! Dense linear-algebra primitives.
//!
//! Projectors are always carried as orthonormal bases; the `n × n` matrix is
//! only materialised by [`SubspaceBasis::projector`], which exists for tests.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::subset::ModelSubset;

/// Relative rank tolerance applied to the largest singular value.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Orthonormal basis of a column space.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    columns: DMatrix<f64>,
    source: Option<ModelSubset>,
}

impl SubspaceBasis {
    /// The zero subspace of `R^n`.
    pub fn empty(n: usize) -> Self {
        SubspaceBasis {
            columns: DMatrix::zeros(n, 0),
            source: None,
        }
    }

    /// Wraps columns the caller guarantees to be orthonormal.
    pub fn from_orthonormal(columns: DMatrix<f64>) -> Self {
        SubspaceBasis {
            columns,
            source: None,
        }
    }

    pub fn with_source(mut self, source: ModelSubset) -> Self {
        self.source = Some(source);
        self
    }

    pub fn source(&self) -> Option<&ModelSubset> {
        self.source.as_ref()
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn rank(&self) -> usize {
        self.columns.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.columns.nrows()
    }

    /// Dense `n × n` projector. Slow; used by oracle checks only.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.columns * self.columns.transpose()
    }

    /// Largest entrywise deviation of `QᵀQ` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.columns.transpose() * &self.columns;
        let k = g.nrows();
        let mut worst = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }
}

/// Orthonormal basis of `col(x)`; directions whose singular value falls
/// below `tol · σ_max` are dropped.
pub fn orthonormal_basis(x: &DMatrix<f64>, tol: f64) -> SubspaceBasis {
    let n = x.nrows();
    if x.ncols() == 0 || n == 0 {
        return SubspaceBasis::empty(n);
    }
    let svd = x.clone().svd(true, false);
    let sigma = &svd.singular_values;
    let smax = sigma.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 || !smax.is_finite() {
        return SubspaceBasis::empty(n);
    }
    let u = svd.u.expect("left singular vectors requested");
    let keep: Vec<usize> = (0..sigma.len())
        .filter(|&i| sigma[i] > tol * smax)
        .collect();
    let mut q = DMatrix::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        q.set_column(c, &u.column(i));
    }
    SubspaceBasis::from_orthonormal(q)
}

/// `P v` for the projector onto `basis`.
pub fn project(basis: &SubspaceBasis, v: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim("project", basis.ambient_dim(), v.len())?;
    if basis.rank() == 0 {
        return Ok(DVector::zeros(v.len()));
    }
    let q = basis.columns();
    Ok(q * (q.transpose() * v))
}

/// `(Id − P) v`.
pub fn residual(basis: &SubspaceBasis, v: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(v - project(basis, v)?)
}

/// `(Id − P) M`, column by column.
pub fn residual_matrix(basis: &SubspaceBasis, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_dim("residual_matrix", basis.ambient_dim(), m.nrows())?;
    if basis.rank() == 0 {
        return Ok(m.clone());
    }
    let q = basis.columns();
    Ok(m - q * (q.transpose() * m))
}

/// Operator-norm distance `‖P₁ − P₂‖_op` between two subspaces.
///
/// Equal ranks give the sine of the largest principal angle; unequal ranks
/// give exactly 1. The sine is read off `‖(Id − P₁)Q₂‖₂`, which keeps full
/// relative accuracy for nearly coincident subspaces, and the larger of the
/// two orderings is returned so the result is exactly symmetric.
pub fn sin_theta_distance(b1: &SubspaceBasis, b2: &SubspaceBasis) -> Result<f64> {
    check_dim("sin_theta_distance", b1.ambient_dim(), b2.ambient_dim())?;
    if b1.rank() != b2.rank() {
        return Ok(1.0);
    }
    if b1.rank() == 0 {
        return Ok(0.0);
    }
    let a = one_sided_sine(b1, b2);
    let b = one_sided_sine(b2, b1);
    Ok(a.max(b).clamp(0.0, 1.0))
}

fn one_sided_sine(b1: &SubspaceBasis, b2: &SubspaceBasis) -> f64 {
    let q1 = b1.columns();
    let q2 = b2.columns();
    let r = q2 - q1 * (q1.transpose() * q2);
    if r.ncols() == 1 {
        return r.norm();
    }
    // k × k Gram of the residual; its top eigenvalue is sin²θ_max
    let g = r.transpose() * &r;
    let top = g
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(0.0, f64::max);
    top.max(0.0).sqrt()
}

/// Orthonormal basis of `col(X_D) ∩ col(X_I)^⊥`, built by orthogonalising
/// `(Id − P_I) X_{D\I}`.
pub fn residual_basis(
    full: &SubspaceBasis,
    inner: &SubspaceBasis,
    extra: &DMatrix<f64>,
    tol: f64,
) -> Result<SubspaceBasis> {
    check_dim("residual_basis", full.ambient_dim(), inner.ambient_dim())?;
    check_dim("residual_basis", full.ambient_dim(), extra.nrows())?;
    if extra.ncols() == 0 {
        return Ok(SubspaceBasis::empty(full.ambient_dim()));
    }
    if inner.rank() == 0 {
        return Ok(orthonormal_basis(extra, tol));
    }
    let resid = residual_matrix(inner, extra)?;
    // rank detection relative to the unprojected columns, so directions that
    // lie (numerically) inside col(X_I) are dropped rather than amplified
    let scale = extra.norm().max(f64::MIN_POSITIVE);
    let svd = resid.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sigma = &svd.singular_values;
    let keep: Vec<usize> = (0..sigma.len())
        .filter(|&i| sigma[i] > tol * scale)
        .collect();
    let mut q = DMatrix::zeros(full.ambient_dim(), keep.len());
    for (c, &i) in keep.iter().enumerate() {
        q.set_column(c, &u.column(i));
    }
    Ok(SubspaceBasis::from_orthonormal(q))
}

/// The Schur complement `Γ(D)` of `Σ̂_{D,D}` in `Σ̂` restricted to `S \ D`.
#[derive(Debug, Clone)]
pub struct SchurComplement {
    pub matrix: DMatrix<f64>,
    pub candidate: ModelSubset,
    pub truth: ModelSubset,
    /// Set when `Σ̂_{D,D}` was singular at tolerance and a pseudoinverse was used.
    pub used_pseudoinverse: bool,
}

impl SchurComplement {
    /// `S \ D`, the coordinates `Γ(D)` is indexed by.
    pub fn residual_coordinates(&self) -> ModelSubset {
        self.truth.difference(&self.candidate)
    }

    /// `bᵀ Γ(D) b` for a vector indexed by `S \ D`.
    pub fn quadratic(&self, b: &DVector<f64>) -> Result<f64> {
        check_dim("SchurComplement::quadratic", self.matrix.nrows(), b.len())?;
        Ok(b.dot(&(&self.matrix * b)))
    }
}

/// `Γ(D) = Σ̂_{R,R} − Σ̂_{R,D} Σ̂_{D,D}⁻¹ Σ̂_{D,R}` with `R = S \ D`.
pub fn schur_gamma(
    sigma_hat: &DMatrix<f64>,
    candidate: &ModelSubset,
    truth: &ModelSubset,
    tol: f64,
) -> Result<SchurComplement> {
    let p = sigma_hat.nrows();
    check_dim("schur_gamma", p, sigma_hat.ncols())?;
    for s in [candidate, truth] {
        if let Some(m) = s.max_index() {
            if m >= p {
                return Err(Error::InvalidInput(format!(
                    "index {m} out of range for p = {p}"
                )));
            }
        }
    }
    let rest = truth.difference(candidate);
    if rest.is_empty() {
        return Err(Error::NoResidualCoordinates);
    }
    let rr = submatrix(sigma_hat, rest.indices(), rest.indices());
    if candidate.is_empty() {
        return Ok(SchurComplement {
            matrix: symmetrize(rr),
            candidate: candidate.clone(),
            truth: truth.clone(),
            used_pseudoinverse: false,
        });
    }
    let rd = submatrix(sigma_hat, rest.indices(), candidate.indices());
    let dd = submatrix(sigma_hat, candidate.indices(), candidate.indices());
    let (dd_inv, pinv) = symmetric_pseudoinverse(&dd, tol);
    let gamma = rr - &rd * dd_inv * rd.transpose();
    Ok(SchurComplement {
        matrix: symmetrize(gamma),
        candidate: candidate.clone(),
        truth: truth.clone(),
        used_pseudoinverse: pinv,
    })
}

/// Pseudoinverse of a symmetric matrix by eigendecomposition; eigenvalues
/// below `tol · λ_max` are zeroed. The flag reports whether any were.
pub fn symmetric_pseudoinverse(a: &DMatrix<f64>, tol: f64) -> (DMatrix<f64>, bool) {
    let eig = a.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let k = a.nrows();
    let mut inv = DMatrix::zeros(k, k);
    let mut truncated = false;
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lmax == 0.0 || lambda <= tol * lmax {
            truncated = true;
            continue;
        }
        let v = eig.eigenvectors.column(i);
        inv += (v * v.transpose()) / lambda;
    }
    (inv, truncated)
}

/// Rows and columns of `m` picked by index lists.
pub fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Columns of `m` picked by index list.
pub fn select_columns(m: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])])
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use nalgebra::dvector;
    use proptest::prelude::*;

    fn span(v: &[f64]) -> SubspaceBasis {
        orthonormal_basis(&DMatrix::from_column_slice(v.len(), 1, v), DEFAULT_RANK_TOL)
    }

    /// Slow oracle: spectral norm of the dense projector difference.
    fn dense_sin_theta(b1: &SubspaceBasis, b2: &SubspaceBasis) -> f64 {
        let diff = b1.projector() - b2.projector();
        diff.symmetric_eigen()
            .eigenvalues
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn basis_of_full_rank_diagonal() {
        let b = orthonormal_basis(&dmatrix![1.0, 0.0; 0.0, 2.0], DEFAULT_RANK_TOL);
        assert_eq!(b.rank(), 2);
        assert!(b.orthonormality_error() < 1e-12);
    }

    #[test]
    fn basis_detects_duplicated_column() {
        let b = orthonormal_basis(&dmatrix![1.0, 2.0; 2.0, 4.0], DEFAULT_RANK_TOL);
        assert_eq!(b.rank(), 1);
        let q = b.columns().column(0).into_owned();
        let target = dvector![1.0, 2.0] / 5f64.sqrt();
        assert!((q.dot(&target).abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn basis_normalizes_single_column() {
        let b = span(&[1.0, 1.0, 1.0]);
        let q = b.columns().column(0).into_owned();
        for v in q.iter() {
            assert!((v.abs() - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_input_gives_rank_zero() {
        let b = orthonormal_basis(&DMatrix::zeros(4, 2), DEFAULT_RANK_TOL);
        assert_eq!(b.rank(), 0);
        assert_eq!(b.ambient_dim(), 4);
    }

    #[test]
    fn projection_examples() {
        let e1 = span(&[1.0, 0.0]);
        let p = project(&e1, &dvector![3.0, 4.0]).unwrap();
        assert!((p - dvector![3.0, 0.0]).norm() < 1e-12);

        let zero = SubspaceBasis::empty(2);
        assert_eq!(
            project(&zero, &dvector![3.0, 4.0]).unwrap(),
            dvector![0.0, 0.0]
        );

        let diag = span(&[1.0, 1.0]);
        let p = project(&diag, &dvector![1.0, 0.0]).unwrap();
        assert!((p - dvector![0.5, 0.5]).norm() < 1e-12);

        assert!(matches!(
            project(&diag, &dvector![1.0, 0.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sin_theta_examples() {
        let e1 = span(&[1.0, 0.0]);
        let e2 = span(&[0.0, 1.0]);
        let d = span(&[1.0, 1.0]);
        assert_eq!(sin_theta_distance(&e1, &e2).unwrap(), 1.0);
        assert_eq!(sin_theta_distance(&e1, &e1).unwrap(), 0.0);
        let v = sin_theta_distance(&e2, &d).unwrap();
        let oracle = dense_sin_theta(&e2, &d);
        assert!((oracle - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((v - oracle).abs() < 1e-12);
    }

    #[test]
    fn sin_theta_unequal_ranks_is_one() {
        let e1 = span(&[1.0, 0.0, 0.0]);
        let plane = orthonormal_basis(&dmatrix![1.0, 0.0; 0.0, 1.0; 0.0, 0.0], DEFAULT_RANK_TOL);
        assert_eq!(sin_theta_distance(&e1, &plane).unwrap(), 1.0);
        assert!(sin_theta_distance(&e1, &span(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn residual_basis_examples() {
        let xd = dmatrix![1.0, 0.0; 0.0, 1.0; 0.0, 0.0];
        let full = orthonormal_basis(&xd, DEFAULT_RANK_TOL);
        // I = ∅
        let r = residual_basis(&full, &SubspaceBasis::empty(3), &xd, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(r.rank(), 2);
        // D = I
        let r = residual_basis(&full, &full, &DMatrix::zeros(3, 0), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(r.rank(), 0);
        // I indexes e1
        let inner = span(&[1.0, 0.0, 0.0]);
        let extra = select_columns(&xd, &[1]);
        let r = residual_basis(&full, &inner, &extra, DEFAULT_RANK_TOL).unwrap();
        assert!(sin_theta_distance(&r, &span(&[0.0, 1.0, 0.0])).unwrap() < 1e-12);
    }

    fn hand_instance() -> DMatrix<f64> {
        let r2 = 2f64.sqrt();
        dmatrix![r2, 0.0, 1.0; 0.0, r2, 1.0]
    }

    #[test]
    fn schur_hand_values() {
        let x = hand_instance();
        let sigma = x.transpose() * &x / 2.0;
        let s = ModelSubset::new(vec![0]);
        let g = schur_gamma(&sigma, &ModelSubset::new(vec![1]), &s, DEFAULT_RANK_TOL).unwrap();
        assert!((g.matrix[(0, 0)] - 1.0).abs() < 1e-12);
        let g = schur_gamma(&sigma, &ModelSubset::new(vec![2]), &s, DEFAULT_RANK_TOL).unwrap();
        assert!((g.matrix[(0, 0)] - 0.5).abs() < 1e-12);
        assert!(matches!(
            schur_gamma(&sigma, &ModelSubset::new(vec![0, 1]), &s, DEFAULT_RANK_TOL),
            Err(Error::NoResidualCoordinates)
        ));
    }

    #[test]
    fn schur_with_zero_cross_covariance() {
        let sigma = dmatrix![2.0, 0.3, 0.0; 0.3, 1.5, 0.0; 0.0, 0.0, 1.0];
        let g = schur_gamma(
            &sigma,
            &ModelSubset::new(vec![2]),
            &ModelSubset::new(vec![0, 1]),
            DEFAULT_RANK_TOL,
        )
        .unwrap();
        assert!((g.matrix.clone() - submatrix(&sigma, &[0, 1], &[0, 1])).norm() < 1e-14);
    }

    #[test]
    fn schur_singular_block_uses_pseudoinverse() {
        // columns 1 and 2 identical: Σ̂_{D,D} singular
        let x = dmatrix![1.0, 1.0, 1.0; 0.0, 2.0, 2.0; 1.0, 0.0, 0.0; 3.0, 1.0, 1.0];
        let sigma = x.transpose() * &x / 4.0;
        let d = ModelSubset::new(vec![1, 2]);
        let g = schur_gamma(&sigma, &d, &ModelSubset::new(vec![0]), DEFAULT_RANK_TOL).unwrap();
        assert!(g.used_pseudoinverse);
        let basis = orthonormal_basis(&select_columns(&x, &[1, 2]), DEFAULT_RANK_TOL);
        let r = residual(&basis, &x.column(0).into_owned()).unwrap();
        assert!((g.matrix[(0, 0)] - r.norm_squared() / 4.0).abs() < 1e-10);
    }

    fn matrix_strategy(n: usize, p: usize) -> impl Strategy<Value = DMatrix<f64>> {
        prop::collection::vec(-2.0f64..2.0, n * p).prop_map(move |v| DMatrix::from_vec(n, p, v))
    }

    proptest! {
        #[test]
        fn projection_is_idempotent(x in matrix_strategy(12, 4), v in prop::collection::vec(-3.0f64..3.0, 12)) {
            let b = orthonormal_basis(&x, DEFAULT_RANK_TOL);
            prop_assert!(b.orthonormality_error() < 1e-10);
            let v = DVector::from_vec(v);
            let once = project(&b, &v).unwrap();
            let twice = project(&b, &once).unwrap();
            for (a, c) in once.iter().zip(twice.iter()) {
                prop_assert!((a - c).abs() < 1e-9);
            }
        }

        #[test]
        fn sin_theta_is_a_bounded_symmetric_metric(
            a in matrix_strategy(6, 2), b in matrix_strategy(6, 2), c in matrix_strategy(6, 2)
        ) {
            let (ba, bb, bc) = (
                orthonormal_basis(&a, DEFAULT_RANK_TOL),
                orthonormal_basis(&b, DEFAULT_RANK_TOL),
                orthonormal_basis(&c, DEFAULT_RANK_TOL),
            );
            let ab = sin_theta_distance(&ba, &bb).unwrap();
            let ba_ = sin_theta_distance(&bb, &ba).unwrap();
            let bc_ = sin_theta_distance(&bb, &bc).unwrap();
            let ac = sin_theta_distance(&ba, &bc).unwrap();
            prop_assert_eq!(ab, ba_);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert!(ac <= ab + bc_ + 1e-9);
            prop_assert!((ab - dense_sin_theta(&ba, &bb)).abs() < 1e-9);
        }

        #[test]
        fn rank_one_closed_form(u in prop::collection::vec(-1.0f64..1.0, 5), v in prop::collection::vec(-1.0f64..1.0, 5)) {
            let u = DVector::from_vec(u);
            let v = DVector::from_vec(v);
            prop_assume!(u.norm() > 1e-3 && v.norm() > 1e-3);
            let (u, v) = (u.normalize(), v.normalize());
            let d = sin_theta_distance(&span(u.as_slice()), &span(v.as_slice())).unwrap();
            let c = u.dot(&v);
            prop_assert!((d - (1.0 - c * c).max(0.0).sqrt()).abs() < 1e-10);
        }

        #[test]
        fn residual_basis_projector_matches_difference(x in matrix_strategy(10, 4), split in 0usize..4) {
            let full = orthonormal_basis(&x, DEFAULT_RANK_TOL);
            prop_assume!(full.rank() == 4);
            let inner_cols: Vec<usize> = (0..split).collect();
            let extra_cols: Vec<usize> = (split..4).collect();
            let inner = orthonormal_basis(&select_columns(&x, &inner_cols), DEFAULT_RANK_TOL);
            let r = residual_basis(&full, &inner, &select_columns(&x, &extra_cols), DEFAULT_RANK_TOL).unwrap();
            let diff = full.projector() - inner.projector() - r.projector();
            prop_assert!(diff.amax() < 1e-8);
        }
    }
}
