//! Small dense symmetric-matrix helpers on top of `nalgebra`.
//!
//! Inverses go through a Cholesky factorization after a reciprocal-condition check on
//! the eigenvalues. Nothing here falls back to a pseudo-inverse.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{AldarError, Result};

pub const RCOND_MIN: f64 = 1e-12;

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Ratio of smallest to largest eigenvalue (negative when indefinite).
pub fn reciprocal_condition(m: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(symmetrize(m));
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || !min.is_finite() {
        return f64::NAN;
    }
    min / max
}

/// Inverse of a symmetric positive definite matrix with condition monitoring.
pub fn spd_inverse(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let s = symmetrize(m);
    let rcond = reciprocal_condition(&s);
    if !(rcond >= RCOND_MIN) {
        return Err(AldarError::SingularInformation { what, rcond });
    }
    let chol = s.cholesky().ok_or(AldarError::NotPositiveDefinite(what))?;
    Ok(symmetrize(&chol.inverse()))
}

/// `v′ M⁻¹ v` for symmetric positive definite `M`.
pub fn spd_quad_form(m: &DMatrix<f64>, v: &DVector<f64>, what: &'static str) -> Result<f64> {
    let s = symmetrize(m);
    let rcond = reciprocal_condition(&s);
    if !(rcond >= RCOND_MIN) {
        return Err(AldarError::SingularInformation { what, rcond });
    }
    let chol = s.cholesky().ok_or(AldarError::NotPositiveDefinite(what))?;
    Ok(v.dot(&chol.solve(v)))
}

/// `ln det M` from the Cholesky factor.
pub fn spd_logdet(m: &DMatrix<f64>, what: &'static str) -> Result<f64> {
    let chol = symmetrize(m).cholesky().ok_or(AldarError::NotPositiveDefinite(what))?;
    Ok(2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// Symmetric inverse square root with eigenvalues floored at `floor`.
pub fn sym_inv_sqrt(m: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.max(floor).sqrt()));
    symmetrize(&(&eig.eigenvectors * d * eig.eigenvectors.transpose()))
}

pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(symmetrize(m)).eigenvalues.iter().cloned().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_and_logdet() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let inv = spd_inverse(&m, "m").unwrap();
        let id = &m * &inv;
        assert!((id - DMatrix::identity(2, 2)).norm() < 1e-12);
        assert!((spd_logdet(&m, "m").unwrap() - 11f64.ln()).abs() < 1e-12);
        let v = DVector::from_vec(vec![1.0, 2.0]);
        let q = spd_quad_form(&m, &v, "m").unwrap();
        assert!((q - v.dot(&(inv * &v))).abs() < 1e-12);
    }

    #[test]
    fn singular_is_reported() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(spd_inverse(&m, "m"), Err(AldarError::SingularInformation { .. })));
        assert!(spd_logdet(&DMatrix::from_row_slice(1, 1, &[-1.0]), "m").is_err());
    }

    #[test]
    fn inverse_square_root() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let r = sym_inv_sqrt(&m, 1e-12);
        let back = &r * &m * &r;
        assert!((back - DMatrix::identity(2, 2)).norm() < 1e-12);
        let e = sym_eigenvalues(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0])));
        assert_eq!(e, vec![3.0, 1.0]);
    }
}
