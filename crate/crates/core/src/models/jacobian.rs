//! Change of parameterization for Fisher matrices.

use nalgebra::DMatrix;

use crate::error::{CrbError, Result};
use crate::fisher::FisherMatrix;
use crate::linalg;

use super::sine::{SineSpec, SINE_LABELS};

/// Largest accepted condition number of a Jacobian.
const MAX_CONDITION: f64 = 1e14;

/// `∂g/∂θ` for an invertible reparameterization `ϑ = g(θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    matrix: DMatrix<f64>,
    in_labels: Vec<String>,
    out_labels: Vec<String>,
}

impl Jacobian {
    /// Row `i` holds the derivatives of output `i`.
    pub fn new<S: Into<String>, T: Into<String>>(
        matrix: DMatrix<f64>,
        in_labels: Vec<S>,
        out_labels: Vec<T>,
    ) -> Result<Self> {
        let in_labels: Vec<String> = in_labels.into_iter().map(Into::into).collect();
        let out_labels: Vec<String> = out_labels.into_iter().map(Into::into).collect();
        if !matrix.is_square() || matrix.nrows() != in_labels.len() || matrix.nrows() != out_labels.len() {
            return Err(CrbError::DimensionMismatch(format!(
                "Jacobian {}x{} with {} inputs and {} outputs",
                matrix.nrows(),
                matrix.ncols(),
                in_labels.len(),
                out_labels.len()
            )));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(CrbError::SingularJacobian("non-finite entry".into()));
        }
        let sv = linalg::singular_values(&matrix);
        let (top, bottom) = (sv[0], *sv.last().unwrap());
        if bottom <= 0.0 || top / bottom > MAX_CONDITION {
            return Err(CrbError::SingularJacobian(format!(
                "condition number {:.3e}",
                if bottom > 0.0 { top / bottom } else { f64::INFINITY }
            )));
        }
        Ok(Self {
            matrix,
            in_labels,
            out_labels,
        })
    }

    pub fn identity<S: Into<String> + Clone>(labels: Vec<S>) -> Self {
        let n = labels.len();
        Self::new(DMatrix::identity(n, n), labels.clone(), labels).expect("identity is invertible")
    }

    /// `[A, B, C, omega, v] → [alpha, phi, C, omega, v]` with
    /// `alpha = sqrt(A² + B²)`, `phi = atan2(A, B)`.
    pub fn amplitude_phase(spec: &SineSpec) -> Result<Self> {
        let alpha = spec.amplitude();
        let (sp, cp) = spec.phase().sin_cos();
        let mut m = DMatrix::identity(5, 5);
        m[(0, 0)] = sp;
        m[(0, 1)] = cp;
        m[(1, 0)] = cp / alpha;
        m[(1, 1)] = -sp / alpha;
        Self::new(
            m,
            SINE_LABELS.to_vec(),
            vec!["alpha", "phi", "C", "omega", "v"],
        )
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn in_labels(&self) -> &[String] {
        &self.in_labels
    }

    pub fn out_labels(&self) -> &[String] {
        &self.out_labels
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self
            .matrix
            .clone()
            .try_inverse()
            .ok_or_else(|| CrbError::SingularJacobian("not invertible".into()))?;
        Self::new(inv, self.out_labels.clone(), self.in_labels.clone())
    }

    /// Jacobian of `then ∘ self`.
    pub fn then(&self, then: &Jacobian) -> Result<Self> {
        if then.in_labels != self.out_labels {
            return Err(CrbError::DimensionMismatch(format!(
                "cannot compose: outputs [{}] vs inputs [{}]",
                self.out_labels.join(","),
                then.in_labels.join(",")
            )));
        }
        Self::new(
            &then.matrix * &self.matrix,
            self.in_labels.clone(),
            then.out_labels.clone(),
        )
    }
}

/// Fisher matrix in the new parameters: `G^{-ᵀ} J G^{-1}`, equivalently
/// `J_new^{-1} = G J^{-1} Gᵀ`.
pub fn reparameterize(j: &FisherMatrix, g: &Jacobian) -> Result<FisherMatrix> {
    if j.labels() != g.in_labels() {
        return Err(CrbError::DimensionMismatch(format!(
            "Jacobian inputs [{}] do not match Fisher labels [{}]",
            g.in_labels().join(","),
            j.labels().join(",")
        )));
    }
    let lu = g.matrix().clone().lu();
    let g_inv = lu
        .try_inverse()
        .ok_or_else(|| CrbError::SingularJacobian("not invertible".into()))?;
    let m = g_inv.transpose() * j.entries() * &g_inv;
    FisherMatrix::new(0.5 * (&m + m.transpose()), g.out_labels().to_vec())
}
