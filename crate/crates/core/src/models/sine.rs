//! Sinusoid in white Gaussian noise,
//! `y(k) = A cos(ωk) + B sin(ωk) + C + w(k)` for `k = 0..n`.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{CrbError, Result};
use crate::fisher::{bayes_factor, FisherMatrix, Partition};

pub const SINE_LABELS: [&str; 5] = ["A", "B", "C", "omega", "v"];
pub const MIN_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineSpec {
    a: f64,
    b: f64,
    c: f64,
    omega: f64,
    v: f64,
    n: usize,
}

impl SineSpec {
    pub fn new(a: f64, b: f64, c: f64, omega: f64, v: f64, n: usize) -> Result<Self> {
        if ![a, b, c, omega, v].iter().all(|x| x.is_finite()) {
            return Err(CrbError::InvalidSpec("non-finite sine parameter".into()));
        }
        if a * a + b * b <= 0.0 {
            return Err(CrbError::InvalidSpec("A² + B² must be positive".into()));
        }
        if !(omega > 0.0 && omega < PI) {
            return Err(CrbError::InvalidSpec(format!("omega = {omega} outside (0, π)")));
        }
        if v <= 0.0 {
            return Err(CrbError::InvalidSpec(format!("noise variance {v} must be positive")));
        }
        if n < MIN_SAMPLES {
            return Err(CrbError::InvalidSpec(format!("n = {n} below {MIN_SAMPLES}")));
        }
        Ok(Self { a, b, c, omega, v, n })
    }

    /// From `alpha sin(ωk + phi) + C`, i.e. `A = alpha sin(phi)`, `B = alpha cos(phi)`.
    pub fn from_amplitude_phase(alpha: f64, phi: f64, c: f64, omega: f64, v: f64, n: usize) -> Result<Self> {
        Self::new(alpha * phi.sin(), alpha * phi.cos(), c, omega, v, n)
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn v(&self) -> f64 {
        self.v
    }
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitude(&self) -> f64 {
        self.a.hypot(self.b)
    }

    /// `atan2(A, B)`.
    pub fn phase(&self) -> f64 {
        self.a.atan2(self.b)
    }

    /// `[A, B, C, omega]`.
    pub fn signal_params(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.omega]
    }
}

/// `A cos(ωk) + B sin(ωk) + C` for `k = 0..n`, with `params = [A, B, C, ω]`.
pub fn sine_signal(params: &[f64], n: usize) -> Vec<f64> {
    let [a, b, c, w] = [params[0], params[1], params[2], params[3]];
    (0..n)
        .map(|k| {
            let (s, co) = (w * k as f64).sin_cos();
            a * co + b * s + c
        })
        .collect()
}

/// Row-major `n × 4` derivative of [`sine_signal`] with respect to `[A, B, C, ω]`.
pub fn sine_signal_gradient(params: &[f64], n: usize) -> DMatrix<f64> {
    let [a, b, w] = [params[0], params[1], params[3]];
    DMatrix::from_fn(n, 4, |k, j| {
        let kf = k as f64;
        let (s, co) = (w * kf).sin_cos();
        match j {
            0 => co,
            1 => s,
            2 => 1.0,
            _ => kf * (b * co - a * s),
        }
    })
}

/// Leading-order-in-`n` Fisher matrix over `[A, B, C, omega, v]`, one block per parameter.
pub fn sine_fisher_dominant(spec: &SineSpec) -> Result<(FisherMatrix, Partition)> {
    let n = spec.n as f64;
    let (a, b, v) = (spec.a, spec.b, spec.v);
    let s = 1.0 / (2.0 * v);
    let a_w = -b * n * n / 2.0;
    let b_w = a * n * n / 2.0;
    let w_w = (a * a + b * b) * n.powi(3) / 3.0;
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(5, 5, &[
        n,   0.0, 0.0,       a_w, 0.0,
        0.0, n,   0.0,       b_w, 0.0,
        0.0, 0.0, 2.0 * n,   0.0, 0.0,
        a_w, b_w, 0.0,       w_w, 0.0,
        0.0, 0.0, 0.0,       0.0, n / v,
    ]) * s;
    let j = FisherMatrix::new(m, SINE_LABELS.to_vec())?;
    let p = Partition::singletons(&j);
    Ok((j, p))
}

/// `(2v / n³) · 12 / (A² + B²)`.
pub fn sine_crb_omega(spec: &SineSpec) -> f64 {
    2.0 * spec.v / (spec.n as f64).powi(3) * 12.0 / (spec.a * spec.a + spec.b * spec.b)
}

/// `(2v / n³) · 12 / ((A² + B²) + 3B²)`.
pub fn sine_crb_omega_given_a(spec: &SineSpec) -> f64 {
    let (a2, b2) = (spec.a * spec.a, spec.b * spec.b);
    2.0 * spec.v / (spec.n as f64).powi(3) * 12.0 / (a2 + b2 + 3.0 * b2)
}

/// Inflation of the bounds on `A`, `B`, `C` caused by an unknown frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineInflation {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl SineInflation {
    pub fn get(&self, label: &str) -> Option<f64> {
        match label {
            "A" => Some(self.a),
            "B" => Some(self.b),
            "C" => Some(self.c),
            _ => None,
        }
    }
}

/// Closed-form factors `1 + 3B²/(A²+B²)`, `1 + 3A²/(A²+B²)` and `1`.
pub fn sine_inflation_factors(spec: &SineSpec) -> SineInflation {
    let (a2, b2) = (spec.a * spec.a, spec.b * spec.b);
    SineInflation {
        a: 1.0 + 3.0 * b2 / (a2 + b2),
        b: 1.0 + 3.0 * a2 / (a2 + b2),
        c: 1.0,
    }
}

/// The same factors read off the dominant Fisher matrix with [`bayes_factor`].
pub fn sine_inflation_from_fisher(spec: &SineSpec) -> Result<SineInflation> {
    let (j, p) = sine_fisher_dominant(spec)?;
    let f = |x: &str| bayes_factor(&j, &p, x, "omega").map(|b| b.factor);
    Ok(SineInflation {
        a: f("A")?,
        b: f("B")?,
        c: f("C")?,
    })
}
