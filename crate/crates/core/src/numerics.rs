//! Dense complex linear algebra kernel.
//!
//! Shifted Hermitian solves with a resolvent-set acceptance gate, Hermitian
//! eigendecomposition, singular values, norms and traces. Every identity
//! check in the crate bottoms out here.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub type Complex64 = Complex<f64>;
pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative threshold on the smallest singular value of `H - shift I`
/// below which a shift is rejected as a resolvent-set point.
pub const DEFAULT_SINGULAR_REL_THRESHOLD: f64 = 1e-10;

/// Relative residual a solve must reach, after at most one step of
/// iterative refinement.
pub const SOLVE_RESIDUAL_REL_TOL: f64 = 1e-10;

/// Relative Frobenius deviation allowed by the Hermitian precondition.
pub const HERMITIAN_REL_TOL: f64 = 1e-12;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> Complex64 {
    Complex::new(re, 0.0)
}

/// Build a matrix from row-major entries, validating shape and finiteness.
pub fn matrix_from_rows(rows: usize, cols: usize, entries: &[Complex64]) -> Result<CMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyMatrix { rows, cols });
    }
    if entries.len() != rows * cols {
        return Err(Error::DimensionMismatch {
            context: format!("expected {} entries for a {rows}x{cols} matrix, got {}", rows * cols, entries.len()),
        });
    }
    let m = CMatrix::from_row_slice(rows, cols, entries);
    check_finite(&m)?;
    Ok(m)
}

/// Reject NaN/Inf entries.
pub fn check_finite(m: &CMatrix) -> Result<()> {
    for col in 0..m.ncols() {
        for row in 0..m.nrows() {
            let z = m[(row, col)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite { row, col, re: z.re, im: z.im });
            }
        }
    }
    Ok(())
}

/// Relative Frobenius deviation of `m` from its adjoint.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.adjoint()).norm() / norm
}

/// Hermitian part `(M + M*) / 2`.
pub fn re_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Skew part `(M - M*) / 2i`, itself Hermitian.
pub fn im_part(m: &CMatrix) -> CMatrix {
    (m - m.adjoint()) * c(0.0, -0.5)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.trace()
}

/// Solve `(H - shift I) X = rhs`.
///
/// The shift is accepted only if the smallest singular value of the shifted
/// matrix stays above `tau_rel * ||H||_F`; rejected shifts signal that the
/// point is not treated as belonging to the resolvent set. One step of
/// iterative refinement is applied when the first residual misses
/// [`SOLVE_RESIDUAL_REL_TOL`].
pub fn solve(h: &CMatrix, shift: Complex64, rhs: &CMatrix, tau_rel: f64) -> Result<CMatrix> {
    let n = h.nrows();
    if n == 0 {
        return Err(Error::EmptyMatrix { rows: 0, cols: 0 });
    }
    if h.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: format!("solve requires a square matrix, got {}x{}", h.nrows(), h.ncols()),
        });
    }
    if rhs.nrows() != n {
        return Err(Error::DimensionMismatch {
            context: format!("rhs has {} rows, matrix has {n}", rhs.nrows()),
        });
    }

    let mut shifted = h.clone();
    for i in 0..n {
        shifted[(i, i)] -= shift;
    }
    let threshold = tau_rel * h.norm();
    let lu = shifted.clone().lu();

    let min_sv = smallest_singular_value_estimate(&lu, n);
    if !(min_sv > threshold) {
        return Err(Error::NearSingularShift { operator: None, shift, min_sv, threshold });
    }

    let mut x = lu.solve(rhs).ok_or(Error::NearSingularShift {
        operator: None,
        shift,
        min_sv: 0.0,
        threshold,
    })?;

    let rhs_norm = rhs.norm();
    let tol = SOLVE_RESIDUAL_REL_TOL * rhs_norm;
    let mut residual = rhs - &shifted * &x;
    if residual.norm() > tol {
        if let Some(correction) = lu.solve(&residual) {
            x += correction;
            residual = rhs - &shifted * &x;
        }
        let achieved = residual.norm();
        if achieved > tol && rhs_norm > 0.0 {
            return Err(Error::SolveResidual { achieved: achieved / rhs_norm, required: SOLVE_RESIDUAL_REL_TOL });
        }
    }
    Ok(x)
}

/// Convenience wrapper for vector right-hand sides.
pub fn solve_vec(h: &CMatrix, shift: Complex64, rhs: &CVector, tau_rel: f64) -> Result<CVector> {
    let m = CMatrix::from_column_slice(rhs.len(), 1, rhs.as_slice());
    let x = solve(h, shift, &m, tau_rel)?;
    Ok(CVector::from_column_slice(x.as_slice()))
}

/// Estimate the smallest singular value of the factored matrix by inverse
/// power iteration. Exact in the limit for the shifted Hermitian (normal)
/// matrices this gate is used on.
fn smallest_singular_value_estimate(lu: &nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>, n: usize) -> f64 {
    let mut rng = SplitMix64::derive(0x6A09_E667_F3BC_C908, n as u64);
    let mut x = CVector::from_fn(n, |_, _| c(rng.next_f64() - 0.5, rng.next_f64() - 0.5));
    let nx = x.norm();
    if nx == 0.0 {
        return 0.0;
    }
    x /= cr(nx);
    let mut inv_norm: f64 = 0.0;
    for _ in 0..3 {
        let y = match lu.solve(&x) {
            Some(y) => y,
            None => return 0.0,
        };
        let ny = y.norm();
        if !ny.is_finite() {
            return 0.0;
        }
        if ny == 0.0 {
            return f64::INFINITY;
        }
        inv_norm = ny;
        x = y / cr(ny);
    }
    1.0 / inv_norm
}

/// Eigendecomposition of a Hermitian matrix: ascending real eigenvalues and
/// a unitary matrix of eigenvectors.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl HermitianEigen {
    /// `U diag(t) U*`, for residual checks.
    pub fn reconstruct(&self) -> CMatrix {
        let d = CMatrix::from_diagonal(&DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|t| cr(*t)),
        ));
        &self.eigenvectors * d * self.eigenvectors.adjoint()
    }
}

/// Hermitian eigendecomposition. Rejects matrices whose relative deviation
/// from self-adjointness exceeds [`HERMITIAN_REL_TOL`].
pub fn heig(h: &CMatrix) -> Result<HermitianEigen> {
    if h.nrows() == 0 || h.nrows() != h.ncols() {
        return Err(Error::EmptyMatrix { rows: h.nrows(), cols: h.ncols() });
    }
    let deviation = hermitian_deviation(h);
    if deviation > HERMITIAN_REL_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let symmetrized = re_part(h);
    let eig = nalgebra::SymmetricEigen::new(symmetrized);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    Ok(HermitianEigen { eigenvalues, eigenvectors })
}

/// Eigenvalues only of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(h: &CMatrix) -> Result<Vec<f64>> {
    if h.nrows() == 0 || h.nrows() != h.ncols() {
        return Err(Error::EmptyMatrix { rows: h.nrows(), cols: h.ncols() });
    }
    let deviation = hermitian_deviation(h);
    if deviation > HERMITIAN_REL_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let mut values: Vec<f64> = re_part(h).symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Singular values, descending.
pub fn svd_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Smallest singular value (exact, via SVD).
pub fn min_singular_value(m: &CMatrix) -> f64 {
    svd_values(m).last().copied().unwrap_or(0.0)
}

/// Largest singular value, i.e. the operator 2-norm.
pub fn operator_norm(m: &CMatrix) -> f64 {
    svd_values(m).first().copied().unwrap_or(0.0)
}

/// Count of singular values above `rel_cutoff` times the largest.
pub fn numerical_rank(singular_values: &[f64], rel_cutoff: f64) -> usize {
    match singular_values.first() {
        None => 0,
        Some(&s0) if s0 <= 0.0 => 0,
        Some(&s0) => singular_values.iter().take_while(|&&s| s > rel_cutoff * s0).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn toy_h() -> CMatrix {
        matrix_from_rows(2, 2, &[cr(2.0), cr(-1.0), cr(-1.0), cr(1.0)]).unwrap()
    }

    #[test]
    fn solve_identity_case() {
        let h = CMatrix::identity(2, 2);
        let rhs = matrix_from_rows(2, 1, &[cr(1.0), cr(0.0)]).unwrap();
        let x = solve(&h, cr(0.0), &rhs, DEFAULT_SINGULAR_REL_THRESHOLD).unwrap();
        assert_relative_eq!(x[(0, 0)].re, 1.0);
        assert_relative_eq!(x[(1, 0)].re, 0.0);
    }

    #[test]
    fn solve_scalar_inverse() {
        let h = matrix_from_rows(1, 1, &[cr(2.0)]).unwrap();
        let rhs = matrix_from_rows(1, 1, &[cr(1.0)]).unwrap();
        let x = solve(&h, cr(0.0), &rhs, DEFAULT_SINGULAR_REL_THRESHOLD).unwrap();
        assert_relative_eq!(x[(0, 0)].re, 0.5);
    }

    #[test]
    fn solve_against_closed_form_2x2_inverse() {
        // Oracle: adjugate formula for the inverse of (H - iI).
        let h = toy_h();
        let shift = c(0.0, 1.0);
        let a = h[(0, 0)] - shift;
        let b = h[(0, 1)];
        let cc = h[(1, 0)];
        let d = h[(1, 1)] - shift;
        let det = a * d - b * cc;
        let inv = matrix_from_rows(2, 2, &[d / det, -b / det, -cc / det, a / det]).unwrap();

        let x = solve(&h, shift, &CMatrix::identity(2, 2), DEFAULT_SINGULAR_REL_THRESHOLD).unwrap();
        assert!((&x - &inv).norm() <= 1e-12, "closed-form inverse mismatch");

        let mut shifted = h.clone();
        shifted[(0, 0)] -= shift;
        shifted[(1, 1)] -= shift;
        assert!((shifted * &x - CMatrix::identity(2, 2)).norm() <= 1e-12);
    }

    #[test]
    fn solve_rejects_spectrum_point() {
        let h = matrix_from_rows(2, 2, &[cr(3.0), cr(0.0), cr(0.0), cr(1.0)]).unwrap();
        let err = solve(&h, cr(3.0), &CMatrix::identity(2, 2), DEFAULT_SINGULAR_REL_THRESHOLD).unwrap_err();
        assert!(matches!(err, Error::NearSingularShift { .. }), "{err}");
    }

    #[test]
    fn solve_roundtrip_recovers_rhs() {
        let mut rng = SplitMix64::new(31);
        for trial in 0..10 {
            let n = 3 + trial % 5;
            let g = CMatrix::from_fn(n, n, |_, _| c(rng.next_gaussian(), rng.next_gaussian()));
            let h = re_part(&g);
            let rhs = CMatrix::from_fn(n, 2, |_, _| c(rng.next_gaussian(), rng.next_gaussian()));
            let shift = c(rng.next_in(-1.0, 1.0), rng.next_in(0.4, 1.5));
            let x = solve(&h, shift, &rhs, DEFAULT_SINGULAR_REL_THRESHOLD).unwrap();
            let mut shifted = h.clone();
            for i in 0..n {
                shifted[(i, i)] -= shift;
            }
            assert!((shifted * x - &rhs).norm() <= 1e-10 * rhs.norm());
        }
    }

    #[test]
    fn heig_diagonal() {
        let h = matrix_from_rows(2, 2, &[cr(3.0), cr(0.0), cr(0.0), cr(1.0)]).unwrap();
        let eig = heig(&h).unwrap();
        assert_relative_eq!(eig.eigenvalues[0], 1.0);
        assert_relative_eq!(eig.eigenvalues[1], 3.0);
    }

    #[test]
    fn heig_off_diagonal_symmetry() {
        let h = matrix_from_rows(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]).unwrap();
        let eig = heig(&h).unwrap();
        assert_relative_eq!(eig.eigenvalues[0], -1.0, epsilon = 1e-14);
        assert_relative_eq!(eig.eigenvalues[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn heig_against_characteristic_polynomial() {
        // Oracle: roots of t^2 - 3t + 1 for the toy matrix.
        let disc: f64 = 9.0 - 4.0;
        let lo = (3.0 - disc.sqrt()) / 2.0;
        let hi = (3.0 + disc.sqrt()) / 2.0;
        let eig = heig(&toy_h()).unwrap();
        assert_relative_eq!(eig.eigenvalues[0], lo, epsilon = 1e-14);
        assert_relative_eq!(eig.eigenvalues[1], hi, epsilon = 1e-14);
    }

    #[test]
    fn heig_reconstruction_and_unitarity() {
        let mut rng = SplitMix64::new(77);
        let g = CMatrix::from_fn(12, 12, |_, _| c(rng.next_gaussian(), rng.next_gaussian()));
        let h = re_part(&g);
        let eig = heig(&h).unwrap();
        assert!((eig.reconstruct() - &h).norm() <= 1e-12 * h.norm());
        let u = &eig.eigenvectors;
        assert!((u.adjoint() * u - CMatrix::identity(12, 12)).norm() <= 1e-12);
        for w in eig.eigenvalues.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn heig_rejects_non_hermitian() {
        let m = matrix_from_rows(2, 2, &[cr(1.0), cr(2.0), cr(3.0), cr(4.0)]).unwrap();
        assert!(matches!(heig(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn svd_zero_matrix() {
        let m = CMatrix::zeros(3, 3);
        assert_eq!(svd_values(&m), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn svd_diagonal_magnitudes() {
        let m = matrix_from_rows(2, 2, &[cr(2.0), cr(0.0), cr(0.0), cr(-3.0)]).unwrap();
        let sv = svd_values(&m);
        assert_relative_eq!(sv[0], 3.0, epsilon = 1e-14);
        assert_relative_eq!(sv[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn svd_rank_one_outer_product() {
        let u = CVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let v = CVector::from_vec(vec![c(0.0, 1.0), cr(0.0), cr(0.0)]);
        let m = &u * v.adjoint();
        let sv = svd_values(&m);
        assert_relative_eq!(sv[0], 1.0, epsilon = 1e-14);
        assert!(sv[1] <= 1e-14);
        assert_eq!(numerical_rank(&sv, 1e-8), 1);
    }

    #[test]
    fn svd_frobenius_consistency_and_adjoint_invariance() {
        let mut rng = SplitMix64::new(5);
        let m = CMatrix::from_fn(7, 4, |_, _| c(rng.next_gaussian(), rng.next_gaussian()));
        let sv = svd_values(&m);
        let sum_sq: f64 = sv.iter().map(|s| s * s).sum();
        assert_relative_eq!(sum_sq, m.norm_squared(), max_relative = 1e-12);
        let sv_adj = svd_values(&m.adjoint());
        for (a, b) in sv.iter().zip(&sv_adj) {
            assert_relative_eq!(a, b, max_relative = 1e-12, epsilon = 1e-13);
        }
    }

    #[test]
    fn matrix_from_rows_validates() {
        assert!(matches!(matrix_from_rows(0, 2, &[]), Err(Error::EmptyMatrix { .. })));
        assert!(matches!(
            matrix_from_rows(1, 1, &[c(f64::NAN, 0.0)]),
            Err(Error::NonFinite { .. })
        ));
        assert!(matches!(matrix_from_rows(2, 1, &[cr(0.0)]), Err(Error::DimensionMismatch { .. })));
    }
}
