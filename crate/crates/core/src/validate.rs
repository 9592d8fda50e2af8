//! Monte Carlo checks that estimator error volumes respect, and where the
//! estimator is efficient attain, the computed bounds.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{CrbError, Result};
use crate::fisher::CrbValue;
use crate::linalg;
use crate::models::LmmSpec;
use crate::models::SineSpec;
use crate::rng::{map_reduce, std_normal, trial_rng};

/// Fraction of non-converged sine fits above which a run is rejected.
pub const MAX_DISCARD_FRACTION: f64 = 0.01;
/// Gauss-Newton iterations allowed per sine fit.
pub const REFINE_ITERS: usize = 20;
/// Multiplicative slack for linear problems at `trials >= 1e5`.
pub const LINEAR_SLACK: f64 = 0.05;
/// Multiplicative slack for nonlinear sine fits at `trials = 2000`.
pub const SINE_SLACK: f64 = 0.15;

/// Sample MSE matrix `P̂ = mean((θ̂ - θ)(θ̂ - θ)ᵀ)` of an estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMse {
    pub matrix: DMatrix<f64>,
    pub labels: Vec<String>,
    /// Trials that entered the average.
    pub trials: usize,
    /// Trials excluded because the estimator failed to converge.
    pub discarded: usize,
    pub seed: u64,
    pub estimator_name: String,
    /// `ln |P̂|`.
    pub log_gen_variance: f64,
}

fn log_det_psd(m: &DMatrix<f64>) -> f64 {
    match linalg::log_det_spd(m, "MSE") {
        Ok(v) => v,
        Err(_) => {
            let sym = 0.5 * (m + m.transpose());
            sym.symmetric_eigenvalues().iter().map(|e| e.max(0.0).ln()).sum()
        }
    }
}

impl EmpiricalMse {
    fn from_sum(sum: DMatrix<f64>, labels: Vec<String>, trials: usize, discarded: usize, seed: u64, name: &str) -> Self {
        let m = sum / trials as f64;
        let matrix = 0.5 * (&m + m.transpose());
        Self {
            log_gen_variance: log_det_psd(&matrix),
            matrix,
            labels,
            trials,
            discarded,
            seed,
            estimator_name: name.to_string(),
        }
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn gen_variance(&self) -> f64 {
        self.log_gen_variance.exp()
    }

    /// Diagonal MSE of one parameter.
    pub fn mse(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.matrix[(i, i)])
    }

    /// Sub-matrix over the named parameters.
    pub fn select<S: AsRef<str>>(&self, labels: &[S]) -> Result<Self> {
        let ix = labels
            .iter()
            .map(|l| {
                self.labels
                    .iter()
                    .position(|x| x == l.as_ref())
                    .ok_or_else(|| CrbError::InvalidArgument(format!("no parameter `{}`", l.as_ref())))
            })
            .collect::<Result<Vec<_>>>()?;
        let matrix = linalg::select(&self.matrix, &ix, &ix);
        Ok(Self {
            log_gen_variance: log_det_psd(&matrix),
            matrix,
            labels: ix.iter().map(|&i| self.labels[i].clone()).collect(),
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Within the slack of the bound on both sides.
    Attains,
    /// Above the bound by more than the slack.
    Respects,
    /// Below the bound by more than the slack.
    Violates,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Attains => "attains",
            Verdict::Respects => "respects",
            Verdict::Violates => "violates",
        })
    }
}

/// Compares `ln|P̂|` with `ln CRB` using a multiplicative slack `1 + slack`.
pub fn compare(mse: &EmpiricalMse, bound: &CrbValue, slack: f64) -> Result<Verdict> {
    if mse.dim() != bound.dim {
        return Err(CrbError::DimensionMismatch(format!(
            "MSE over {} parameters, bound over {}",
            mse.dim(),
            bound.dim
        )));
    }
    if slack.is_nan() || slack < 0.0 {
        return Err(CrbError::InvalidArgument(format!("slack {slack} must be non-negative")));
    }
    let tol = slack.ln_1p();
    let gap = mse.log_gen_variance - bound.log_value;
    Ok(if gap < -tol {
        Verdict::Violates
    } else if gap <= tol {
        Verdict::Attains
    } else {
        Verdict::Respects
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmmMode {
    /// Least squares for `x` and `z` together.
    Joint,
    /// Least squares for `x` with `z` subtracted out.
    ZKnown,
}

/// Least-squares error statistics for `y = A x + B z + w`.
pub fn run_lmm_experiment(
    spec: &LmmSpec,
    x: &DVector<f64>,
    z: &DVector<f64>,
    trials: usize,
    seed: u64,
    mode: LmmMode,
) -> Result<EmpiricalMse> {
    if trials < 100 {
        return Err(CrbError::InvalidArgument(format!("trials = {trials}, need at least 100")));
    }
    if x.len() != spec.kx() || z.len() != spec.kz() {
        return Err(CrbError::DimensionMismatch(format!(
            "truth has |x| = {}, |z| = {} for k_x = {}, k_z = {}",
            x.len(),
            z.len(),
            spec.kx(),
            spec.kz()
        )));
    }
    let (design, truth, labels, name) = match mode {
        LmmMode::Joint => {
            let mut t = x.clone().resize_vertically(spec.kx() + spec.kz(), 0.0);
            t.rows_mut(spec.kx(), spec.kz()).copy_from(z);
            let labels: Vec<String> = spec.labels().into_iter().filter(|l| l != "v").collect();
            (spec.design(), t, labels, "least-squares (x, z)")
        }
        LmmMode::ZKnown => (
            spec.a().clone(),
            x.clone(),
            (0..spec.kx()).map(|i| format!("x_{i}")).collect(),
            "least-squares (x | z)",
        ),
    };
    let gram = (design.transpose() * &design)
        .cholesky()
        .ok_or_else(|| CrbError::RankDeficient("design not full column rank".into()))?;
    let pinv = gram.solve(&design.transpose());
    let mean = spec.signal(x, z);
    let known_part = match mode {
        LmmMode::Joint => DVector::zeros(spec.n()),
        LmmMode::ZKnown => spec.b() * z,
    };
    let sd = spec.v().sqrt();
    let k = truth.len();
    let sum = map_reduce(
        trials,
        |t| {
            let mut rng = trial_rng(seed, t as u64);
            let y = mean.map(|m| m + sd * std_normal(&mut rng));
            let err = &pinv * (y - &known_part) - &truth;
            &err * err.transpose()
        },
        |a, b| a + b,
    )
    .unwrap_or_else(|| DMatrix::zeros(k, k));
    Ok(EmpiricalMse::from_sum(sum, labels, trials, 0, seed, name))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SineMode {
    /// Linear least squares for `[A, B, C]` at the true frequency.
    OmegaKnown,
    /// Periodogram search plus Gauss-Newton refinement for `[A, B, C, omega]`.
    OmegaUnknown,
}

/// Three-parameter fit at fixed `omega`.
fn fit_linear(y: &[f64], omega: f64) -> Option<[f64; 3]> {
    let mut g = nalgebra::Matrix3::<f64>::zeros();
    let mut r = nalgebra::Vector3::<f64>::zeros();
    for (k, &yk) in y.iter().enumerate() {
        let (s, c) = (omega * k as f64).sin_cos();
        let h = nalgebra::Vector3::new(c, s, 1.0);
        g += h * h.transpose();
        r += h * yk;
    }
    let sol = g.cholesky()?.solve(&r);
    Some([sol[0], sol[1], sol[2]])
}

struct SineFitter {
    fft: Arc<dyn Fft<f64>>,
    n: usize,
}

impl SineFitter {
    fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(8 * n);
        Self { fft, n }
    }

    /// Peak of the zero-padded periodogram on the grid `π m / (4n)`, `m = 1..4n`.
    fn coarse_omega(&self, y: &[f64]) -> f64 {
        let n = self.n;
        let mean = y.iter().sum::<f64>() / n as f64;
        let mut buf: Vec<Complex<f64>> = y
            .iter()
            .map(|&v| Complex::new(v - mean, 0.0))
            .chain(std::iter::repeat_n(Complex::new(0.0, 0.0), 7 * n))
            .collect();
        self.fft.process(&mut buf);
        let best = (1..4 * n)
            .max_by(|&i, &j| buf[i].norm_sqr().total_cmp(&buf[j].norm_sqr()))
            .unwrap_or(1);
        PI * best as f64 / (4 * n) as f64
    }

    /// Returns `[A, B, C, omega]`, or `None` if refinement did not converge.
    fn fit(&self, y: &[f64]) -> Option<[f64; 4]> {
        let mut omega = self.coarse_omega(y);
        let [a, b, c] = fit_linear(y, omega)?;
        let mut theta = Vector4::new(a, b, c, omega);
        let n = self.n as f64;
        for _ in 0..REFINE_ITERS {
            let mut g = Matrix4::<f64>::zeros();
            let mut r = Vector4::<f64>::zeros();
            for (k, &yk) in y.iter().enumerate() {
                let kf = k as f64;
                let (s, co) = (theta[3] * kf).sin_cos();
                let fit = theta[0] * co + theta[1] * s + theta[2];
                let d = Vector4::new(co, s, 1.0, kf * (theta[1] * co - theta[0] * s));
                g += d * d.transpose();
                r += d * (yk - fit);
            }
            let step = g.cholesky()?.solve(&r);
            theta += step;
            omega = theta[3];
            if !(omega > 0.0 && omega < PI) || theta.iter().any(|x| !x.is_finite()) {
                return None;
            }
            let amp_scale = 1.0 + theta.rows(0, 3).amax();
            if step[3].abs() * n < 1e-9 && step.rows(0, 3).amax() < 1e-9 * amp_scale {
                return Some([theta[0], theta[1], theta[2], theta[3]]);
            }
        }
        None
    }
}

/// Error statistics of sine-wave fits on simulated records.
///
/// Non-converged fits are excluded and counted; more than
/// [`MAX_DISCARD_FRACTION`] of them fails the run.
pub fn run_sine_experiment(spec: &SineSpec, trials: usize, seed: u64, mode: SineMode) -> Result<EmpiricalMse> {
    let n = spec.n();
    if n < 64 {
        return Err(CrbError::InvalidArgument(format!("n = {n}, need at least 64")));
    }
    let margin = 2.0 * PI / n as f64;
    if spec.omega() < margin || spec.omega() > PI - margin {
        return Err(CrbError::InvalidArgument(format!(
            "omega = {} within 2π/n of 0 or π",
            spec.omega()
        )));
    }
    if trials < 2 {
        return Err(CrbError::InvalidArgument(format!("trials = {trials}, need at least 2")));
    }
    let clean = crate::models::sine_signal(&spec.signal_params(), n);
    let sd = spec.v().sqrt();
    let truth = spec.signal_params();
    let k = match mode {
        SineMode::OmegaKnown => 3,
        SineMode::OmegaUnknown => 4,
    };
    let fitter = SineFitter::new(n);
    let (sum, used, discarded) = map_reduce(
        trials,
        |t| {
            let mut rng = trial_rng(seed, t as u64);
            let y: Vec<f64> = clean
                .iter()
                .map(|m| m + sd * std_normal(&mut rng))
                .collect();
            let est: Option<Vec<f64>> = match mode {
                SineMode::OmegaKnown => fit_linear(&y, spec.omega()).map(|e| e.to_vec()),
                SineMode::OmegaUnknown => fitter.fit(&y).map(|e| e.to_vec()),
            };
            match est {
                Some(e) => {
                    let err = DVector::from_fn(k, |i, _| e[i] - truth[i]);
                    (&err * err.transpose(), 1usize, 0usize)
                }
                None => (DMatrix::zeros(k, k), 0, 1),
            }
        },
        |(a, u, d), (b, v, e)| (a + b, u + v, d + e),
    )
    .expect("trials >= 2");
    let limit = (MAX_DISCARD_FRACTION * trials as f64).floor() as usize;
    if discarded > limit || used == 0 {
        return Err(CrbError::ConvergenceFailure {
            discarded,
            trials,
            limit,
        });
    }
    let labels: Vec<String> = ["A", "B", "C", "omega"][..k].iter().map(|s| s.to_string()).collect();
    let name = match mode {
        SineMode::OmegaKnown => "linear least-squares (A, B, C | omega)",
        SineMode::OmegaUnknown => "periodogram + Gauss-Newton (A, B, C, omega)",
    };
    Ok(EmpiricalMse::from_sum(sum, labels, used, discarded, seed, name))
}
