//! Small dense helpers shared by the bound and model code.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{CrbError, Result};

pub(crate) fn cholesky(m: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(CrbError::NotPositiveDefinite {
            what: what.to_string(),
            min_eigenvalue: None,
        });
    }
    let fail = || CrbError::NotPositiveDefinite {
        what: what.to_string(),
        min_eigenvalue: Some(min_eigenvalue(m)),
    };
    let chol = m.clone().cholesky().ok_or_else(fail)?;
    // A pivot at rounding level means the matrix is singular in double precision.
    let floor = m.nrows() as f64 * f64::EPSILON * m.diagonal().amax();
    if chol.l_dirty().diagonal().iter().any(|d| d * d <= floor) {
        return Err(fail());
    }
    Ok(chol)
}

/// Natural log of the determinant of an SPD matrix, via its Cholesky factor.
pub fn log_det_spd(m: &DMatrix<f64>, what: &str) -> Result<f64> {
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let chol = cholesky(m, what)?;
    Ok(log_det_from_cholesky(&chol))
}

pub(crate) fn log_det_from_cholesky(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = 0.5 * (m + m.transpose());
    sym.symmetric_eigenvalues().min()
}

/// Ratio of extreme eigenvalues of a symmetric matrix (infinite when not PD).
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sym = 0.5 * (m + m.transpose());
    let eig = sym.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

pub fn select(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// `m[keep, keep] - m[keep, elim] * m[elim, elim]^{-1} * m[elim, keep]`.
pub fn schur(m: &DMatrix<f64>, keep: &[usize], elim: &[usize], what: &str) -> Result<DMatrix<f64>> {
    let m_kk = select(m, keep, keep);
    if elim.is_empty() {
        return Ok(m_kk);
    }
    let m_ke = select(m, keep, elim);
    let m_ee = select(m, elim, elim);
    let chol = cholesky(&m_ee, what)?;
    let solved = chol.solve(&m_ke.transpose());
    let s = m_kk - &m_ke * solved;
    Ok(0.5 * (&s + s.transpose()))
}

/// Singular values of `m`, largest first.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Numerical rank with threshold `rel_tol * largest singular value`.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    match sv.first() {
        None => 0,
        Some(0.0) => 0,
        Some(&top) => sv.iter().filter(|&&s| s > rel_tol * top).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_det_of_diagonal() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 4.0, 0.5]));
        assert!((log_det_spd(&m, "m").unwrap() - 4.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn log_det_rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match log_det_spd(&m, "m") {
            Err(CrbError::NotPositiveDefinite { min_eigenvalue, .. }) => {
                assert!((min_eigenvalue.unwrap() + 1.0).abs() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schur_two_by_two() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let s = schur(&m, &[0], &[1], "m").unwrap();
        assert!((s[(0, 0)] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn rank_of_dependent_columns() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.0, 0.0, 1.0, 2.0]);
        assert_eq!(numerical_rank(&m, 1e-10), 1);
    }
}
