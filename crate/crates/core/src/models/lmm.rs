//! Linear mixed model `y = A x + B z + w`, `w ~ N(0, v I)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{CrbError, Result};
use crate::fisher::{FisherMatrix, Partition};
use crate::linalg;

/// Relative singular-value threshold for the rank test on `[A B]`.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LmmSpec {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    v: f64,
}

impl LmmSpec {
    /// Requires `rank([A B]) = k_x + k_z < n` and `v > 0`.
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, v: f64) -> Result<Self> {
        if a.nrows() != b.nrows() {
            return Err(CrbError::DimensionMismatch(format!(
                "A has {} rows, B has {}",
                a.nrows(),
                b.nrows()
            )));
        }
        if a.ncols() == 0 || b.ncols() == 0 {
            return Err(CrbError::InvalidSpec("A and B need at least one column".into()));
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(CrbError::InvalidSpec(format!("noise variance {v} must be positive")));
        }
        if a.iter().chain(b.iter()).any(|x| !x.is_finite()) {
            return Err(CrbError::InvalidSpec("non-finite entry in A or B".into()));
        }
        let (n, k) = (a.nrows(), a.ncols() + b.ncols());
        if k >= n {
            return Err(CrbError::RankDeficient(format!(
                "k_x + k_z = {k} must be smaller than n = {n}"
            )));
        }
        let ab = hstack(&a, &b);
        let rank = linalg::numerical_rank(&ab, RANK_TOL);
        if rank < k {
            return Err(CrbError::RankDeficient(format!("rank([A B]) = {rank} < {k}")));
        }
        Ok(Self { a, b, v })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn kx(&self) -> usize {
        self.a.ncols()
    }

    pub fn kz(&self) -> usize {
        self.b.ncols()
    }

    /// `[A B]`.
    pub fn design(&self) -> DMatrix<f64> {
        hstack(&self.a, &self.b)
    }

    /// Noise-free observation `A x + B z`.
    pub fn signal(&self, x: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * z
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.kx())
            .map(|i| format!("x_{i}"))
            .chain((0..self.kz()).map(|i| format!("z_{i}")))
            .chain(std::iter::once("v".to_string()))
            .collect()
    }
}

pub(crate) fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Closed-form FIM over `(x, z, v)` with blocks `x`, `z`, `v`.
pub fn lmm_fisher(spec: &LmmSpec) -> Result<(FisherMatrix, Partition)> {
    let (kx, kz, n) = (spec.kx(), spec.kz(), spec.n());
    let k = kx + kz;
    let d = spec.design();
    let mut m = DMatrix::zeros(k + 1, k + 1);
    m.view_mut((0, 0), (k, k)).copy_from(&(d.transpose() * &d / spec.v));
    m[(k, k)] = n as f64 / (2.0 * spec.v * spec.v);
    let j = FisherMatrix::new(m, spec.labels())?;
    let p = Partition::new(
        k + 1,
        vec![
            ("x", (0..kx).collect()),
            ("z", (kx..k).collect()),
            ("v", vec![k]),
        ],
    )?;
    Ok((j, p))
}

/// `I - A (AᵀA)^{-1} Aᵀ`, the projector onto the orthogonal complement of `range(A)`.
pub fn orth_projector(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, k) = (a.nrows(), a.ncols());
    if k == 0 {
        return Ok(DMatrix::identity(n, n));
    }
    if k > n || linalg::numerical_rank(a, RANK_TOL) < k {
        return Err(CrbError::RankDeficient("A does not have full column rank".into()));
    }
    let q = a.clone().qr().q();
    let p = DMatrix::identity(n, n) - &q * q.transpose();
    Ok(0.5 * (&p + p.transpose()))
}

/// `ln(|BᵀB| / |BᵀΠ⊥_A B|)`.
pub fn lmm_log_inflation(spec: &LmmSpec) -> Result<f64> {
    let b = spec.b();
    let proj = orth_projector(spec.a())?;
    let btb = b.transpose() * b;
    let btpb = b.transpose() * proj * b;
    let btpb = 0.5 * (&btpb + btpb.transpose());
    Ok(linalg::log_det_spd(&btb, "BᵀB")? - linalg::log_det_spd(&btpb, "BᵀΠ⊥B")?)
}

/// Factor by which not knowing `z` multiplies the bound on `x`.
pub fn lmm_inflation(spec: &LmmSpec) -> Result<f64> {
    lmm_log_inflation(spec).map(f64::exp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::{bayes_factor, crb_conditional, crb_marginal, independence_check};

    fn col(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    fn worked() -> LmmSpec {
        LmmSpec::new(col(&[1.0, 0.0, 0.0]), col(&[1.0, 1.0, 0.0]), 1.0).unwrap()
    }

    #[test]
    fn fisher_of_unit_columns() {
        let spec = LmmSpec::new(col(&[1.0, 0.0, 0.0]), col(&[0.0, 1.0, 0.0]), 1.0).unwrap();
        let (j, p) = lmm_fisher(&spec).unwrap();
        let e = j.entries();
        assert_eq!(e.view((0, 0), (2, 2)).clone_owned(), DMatrix::identity(2, 2));
        assert_eq!(e[(2, 2)], 1.5);
        assert_eq!(j.labels(), ["x_0", "z_0", "v"]);
        assert!(independence_check(&j, &p, "x", "v", 0.0).unwrap());
        assert!(independence_check(&j, &p, "z", "v", 0.0).unwrap());
        assert_eq!(
            crb_marginal(&j, &p, "x").unwrap().log_value,
            crb_conditional(&j, &p, "x", &["z"]).unwrap().log_value
        );
    }

    #[test]
    fn worked_inflation_is_two() {
        let spec = worked();
        let f = lmm_inflation(&spec).unwrap();
        assert!((f - 2.0).abs() < 1e-12);
        let (j, p) = lmm_fisher(&spec).unwrap();
        let b = bayes_factor(&j, &p, "x", "z").unwrap();
        assert!((b.factor - f).abs() < 1e-12);
        let marg = crb_marginal(&j, &p, "x").unwrap().value();
        let cond = crb_conditional(&j, &p, "x", &["z", "v"]).unwrap().value();
        assert!((marg - 2.0 * cond).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_ranges_give_unit_inflation() {
        let spec = LmmSpec::new(col(&[1.0, 1.0, 0.0, 0.0]), col(&[1.0, -1.0, 2.0, 0.0]), 0.3).unwrap();
        assert!((lmm_inflation(&spec).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn b_in_range_of_a_is_rank_deficient() {
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let err = LmmSpec::new(a, col(&[1.0, 2.0, 0.0, 0.0]), 1.0).unwrap_err();
        assert!(matches!(err, CrbError::RankDeficient(_)));
        // k = n is rejected as well
        let err = LmmSpec::new(col(&[1.0, 0.0]), col(&[0.0, 1.0]), 1.0).unwrap_err();
        assert!(matches!(err, CrbError::RankDeficient(_)));
    }

    #[test]
    fn projector_examples() {
        let p = orth_projector(&col(&[1.0, 0.0])).unwrap();
        assert!((p - DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0]))).amax() < 1e-15);

        let s = 0.5f64.sqrt();
        let a = DMatrix::from_row_slice(3, 2, &[s, 0.0, s, 0.0, 0.0, 1.0]);
        let p = orth_projector(&a).unwrap();
        let expected = DMatrix::identity(3, 3) - &a * a.transpose();
        assert!((p - expected).amax() < 1e-15);

        assert!(orth_projector(&DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0])).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(LmmSpec::new(col(&[1.0, 0.0, 0.0]), col(&[0.0, 1.0, 0.0]), 0.0).is_err());
        assert!(LmmSpec::new(col(&[1.0, 0.0, 0.0]), col(&[0.0, 1.0]), 1.0).is_err());
    }
}
