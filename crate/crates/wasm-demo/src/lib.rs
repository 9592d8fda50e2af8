//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export wraps a plain function of the same shape so the numbers can be
//! tested natively; the wrappers only translate errors into `JsError`.

use std::f64::consts::PI;

use crb_core::models::{lmm_inflation, reparameterize, sine_fisher_dominant, Jacobian, LmmSpec, SineSpec};
use crb_core::{bayes_factor, FisherMatrix, Partition};
use nalgebra::DMatrix;
use wasm_bindgen::prelude::*;

// The dominant-FIM factors do not depend on these.
const SINE_N: usize = 256;
const SINE_OMEGA: f64 = 1.0;
const SINE_V: f64 = 1.0;

fn js(e: crb_core::CrbError) -> JsError {
    JsError::new(&e.to_string())
}

/// Inflation factors `[A, B, C, alpha, phi]` caused by an unknown frequency.
pub fn sine_factors_for(a: f64, b: f64) -> crb_core::Result<Vec<f64>> {
    let spec = SineSpec::new(a, b, 0.0, SINE_OMEGA, SINE_V, SINE_N)?;
    let (j, p) = sine_fisher_dominant(&spec)?;
    let jp = reparameterize(&j, &Jacobian::amplitude_phase(&spec)?)?;
    let pp = Partition::singletons(&jp);
    let mut out = Vec::with_capacity(5);
    for label in ["A", "B", "C"] {
        out.push(bayes_factor(&j, &p, label, "omega")?.factor);
    }
    for label in ["alpha", "phi"] {
        out.push(bayes_factor(&jp, &pp, label, "omega")?.factor);
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn sine_factors(a: f64, b: f64) -> Result<Vec<f64>, JsError> {
    sine_factors_for(a, b).map_err(js)
}

/// `points` samples of `(phase, factor(A), factor(B))` at unit amplitude,
/// flattened, with the phase running over `[0, 2π)`.
#[wasm_bindgen]
pub fn sine_inflation_sweep(points: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(3 * points);
    for i in 0..points {
        let phi = 2.0 * PI * i as f64 / points as f64;
        let f = sine_factors_for(phi.sin(), phi.cos()).expect("unit amplitude is valid");
        out.extend([phi, f[0], f[1]]);
    }
    out
}

/// LMM inflation `|BᵀB| / |BᵀΠ⊥B|` for single columns `a = e1` and
/// `b = (cos θ, sin θ, 0)`.
pub fn lmm_inflation_at(theta: f64) -> crb_core::Result<f64> {
    let a = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
    let b = DMatrix::from_column_slice(3, 1, &[theta.cos(), theta.sin(), 0.0]);
    lmm_inflation(&LmmSpec::new(a, b, 1.0)?)
}

#[wasm_bindgen]
pub fn lmm_inflation_for_angle(theta: f64) -> Result<f64, JsError> {
    lmm_inflation_at(theta).map_err(js)
}

/// Inflation on the first of two scalar parameters with FIM `[[a, b], [b, c]]`.
pub fn factor_2x2(a: f64, b: f64, c: f64) -> crb_core::Result<f64> {
    let j = FisherMatrix::new(DMatrix::from_row_slice(2, 2, &[a, b, b, c]), vec!["first", "second"])?;
    Ok(bayes_factor(&j, &Partition::singletons(&j), "first", "second")?.factor)
}

#[wasm_bindgen]
pub fn bayes_factor_2x2(a: f64, b: f64, c: f64) -> Result<f64, JsError> {
    factor_2x2(a, b, c).map_err(js)
}
