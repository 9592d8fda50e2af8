//! Fisher information for user-supplied models.
//!
//! [`gaussian_fim`] is exact for `y = x_θ + w` with white Gaussian `w`:
//! `J = DᵀD / v` with `D = ∂x_θ/∂θ`, bordered by `n / (2v²)` when the noise
//! variance is itself a parameter. [`mc_score_fim`] and [`fd_hessian_fim`]
//! estimate `J` from a log-likelihood by Monte Carlo, using central finite
//! differences for the derivatives.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{CrbError, Result};
use crate::fisher::FisherMatrix;
use crate::models::{sine_signal, sine_signal_gradient, LmmSpec};
use crate::rng::{map_reduce, std_normal, trial_rng, TrialRng};

/// Relative central-difference step: `h_i = DEFAULT_STEP * max(1, |θ_i|)`.
pub const DEFAULT_STEP: f64 = 1e-5;

pub type SignalFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;
pub type GradientFn = dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync;
pub type LogLikFn = dyn Fn(&DVector<f64>, &DVector<f64>) -> f64 + Send + Sync;
pub type SamplerFn = dyn Fn(&DVector<f64>, &mut TrialRng) -> DVector<f64> + Send + Sync;

fn step_for(theta_i: f64, step: f64) -> f64 {
    step * theta_i.abs().max(1.0)
}

/// `y = x_θ + w`, `w ~ N(0, v I)`.
#[derive(Clone)]
pub struct AdditiveGaussianModel {
    signal: Arc<SignalFn>,
    gradient: Option<Arc<GradientFn>>,
    v: f64,
    labels: Vec<String>,
}

impl AdditiveGaussianModel {
    pub fn new<S, F>(labels: Vec<S>, v: f64, signal: F) -> Result<Self>
    where
        S: Into<String>,
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        if !(v > 0.0 && v.is_finite()) {
            return Err(CrbError::InvalidSpec(format!("noise variance {v} must be positive")));
        }
        Ok(Self {
            signal: Arc::new(signal),
            gradient: None,
            v,
            labels: labels.into_iter().map(Into::into).collect(),
        })
    }

    /// Supplies `∂x_θ/∂θ` (an `n × k` matrix) instead of finite differences.
    pub fn with_gradient<G>(mut self, gradient: G) -> Self
    where
        G: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    fn check_theta(&self, theta: &DVector<f64>) -> Result<()> {
        if theta.len() != self.labels.len() {
            return Err(CrbError::DimensionMismatch(format!(
                "theta has {} entries for {} parameters",
                theta.len(),
                self.labels.len()
            )));
        }
        Ok(())
    }

    pub fn signal(&self, theta: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_theta(theta)?;
        Ok((self.signal)(theta))
    }

    /// Central-difference `∂x_θ/∂θ`, ignoring any analytic gradient.
    pub fn fd_gradient(&self, theta: &DVector<f64>, step: f64) -> Result<DMatrix<f64>> {
        self.check_theta(theta)?;
        let n = (self.signal)(theta).len();
        let mut d = DMatrix::zeros(n, theta.len());
        for i in 0..theta.len() {
            let h = step_for(theta[i], step);
            let (mut hi, mut lo) = (theta.clone(), theta.clone());
            hi[i] += h;
            lo[i] -= h;
            let (sh, sl) = ((self.signal)(&hi), (self.signal)(&lo));
            if sh.len() != n || sl.len() != n {
                return Err(CrbError::DimensionMismatch("signal length changed with theta".into()));
            }
            d.set_column(i, &((sh - sl) / (2.0 * h)));
        }
        Ok(d)
    }

    /// Analytic gradient if supplied, otherwise central differences.
    pub fn signal_gradient(&self, theta: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_theta(theta)?;
        match &self.gradient {
            Some(g) => {
                let d = g(theta);
                let n = (self.signal)(theta).len();
                if d.nrows() != n || d.ncols() != theta.len() {
                    return Err(CrbError::DimensionMismatch(format!(
                        "gradient is {}x{}, expected {n}x{}",
                        d.nrows(),
                        d.ncols(),
                        theta.len()
                    )));
                }
                Ok(d)
            }
            None => self.fd_gradient(theta, DEFAULT_STEP),
        }
    }

    /// Constant mean `θ·1ₙ`.
    pub fn gaussian_mean(n: usize, v: f64) -> Result<Self> {
        Ok(Self::new(vec!["mu"], v, move |t: &DVector<f64>| DVector::from_element(n, t[0]))?
            .with_gradient(move |_: &DVector<f64>| DMatrix::from_element(n, 1, 1.0)))
    }

    /// `A x + B z` with parameters `x_0.., z_0..`.
    pub fn lmm(spec: &LmmSpec) -> Result<Self> {
        let d = spec.design();
        let dg = d.clone();
        let labels: Vec<String> = spec.labels().into_iter().filter(|l| l != "v").collect();
        Ok(Self::new(labels, spec.v(), move |t: &DVector<f64>| &d * t)?
            .with_gradient(move |_: &DVector<f64>| dg.clone()))
    }

    /// `A cos(ωk) + B sin(ωk) + C` over `[A, B, C, omega]`.
    pub fn sine(n: usize, v: f64) -> Result<Self> {
        Ok(Self::new(vec!["A", "B", "C", "omega"], v, move |t: &DVector<f64>| {
            DVector::from_vec(sine_signal(t.as_slice(), n))
        })?
        .with_gradient(move |t: &DVector<f64>| sine_signal_gradient(t.as_slice(), n)))
    }
}

/// Exact Fisher matrix of an additive white-Gaussian model at `theta`.
///
/// With `include_v` the noise variance is appended as parameter `v`,
/// decoupled from the signal parameters.
pub fn gaussian_fim(model: &AdditiveGaussianModel, theta: &DVector<f64>, include_v: bool) -> Result<FisherMatrix> {
    let d = model.signal_gradient(theta)?;
    let k = theta.len();
    let n = d.nrows();
    let info = d.transpose() * &d / model.v;
    let mut labels = model.labels.clone();
    let m = if include_v {
        let mut m = DMatrix::zeros(k + 1, k + 1);
        m.view_mut((0, 0), (k, k)).copy_from(&info);
        m[(k, k)] = n as f64 / (2.0 * model.v * model.v);
        labels.push("v".into());
        m
    } else {
        info
    };
    FisherMatrix::new(m, labels).map_err(|e| match e {
        CrbError::NotPositiveDefinite { min_eigenvalue, .. } => CrbError::NotPositiveDefinite {
            what: "Fisher matrix (parameters not identifiable at theta)".into(),
            min_eigenvalue,
        },
        other => other,
    })
}

/// A log-likelihood `l(θ; y)` together with a sampler for `y ~ p(·; θ)`.
#[derive(Clone)]
pub struct LogLikelihoodModel {
    loglik: Arc<LogLikFn>,
    sampler: Arc<SamplerFn>,
    labels: Vec<String>,
}

impl LogLikelihoodModel {
    pub fn new<S, L, D>(labels: Vec<S>, loglik: L, sampler: D) -> Self
    where
        S: Into<String>,
        L: Fn(&DVector<f64>, &DVector<f64>) -> f64 + Send + Sync + 'static,
        D: Fn(&DVector<f64>, &mut TrialRng) -> DVector<f64> + Send + Sync + 'static,
    {
        Self {
            loglik: Arc::new(loglik),
            sampler: Arc::new(sampler),
            labels: labels.into_iter().map(Into::into).collect(),
        }
    }

    /// Gaussian log-likelihood of an additive model. With `include_v` the last
    /// entry of `θ` is the noise variance.
    pub fn from_gaussian(model: &AdditiveGaussianModel, include_v: bool) -> Self {
        let k = model.labels.len();
        let fixed_v = model.v;
        let split = move |theta: &DVector<f64>| -> (DVector<f64>, f64) {
            let v = if include_v { theta[k] } else { fixed_v };
            (theta.rows(0, k).into_owned(), v)
        };
        let (sig_l, sig_s) = (model.signal.clone(), model.signal.clone());
        let mut labels = model.labels.clone();
        if include_v {
            labels.push("v".into());
        }
        Self::new(
            labels,
            move |theta: &DVector<f64>, y: &DVector<f64>| {
                let (t, v) = split(theta);
                let r = y - sig_l(&t);
                let n = y.len() as f64;
                -0.5 * n * (2.0 * PI * v).ln() - r.norm_squared() / (2.0 * v)
            },
            move |theta: &DVector<f64>, rng: &mut TrialRng| {
                let (t, v) = split(theta);
                let sd = v.sqrt();
                sig_s(&t).map(|x| x + sd * std_normal(rng))
            },
        )
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn loglik(&self, theta: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (self.loglik)(theta, y)
    }

    pub fn sample(&self, theta: &DVector<f64>, rng: &mut TrialRng) -> DVector<f64> {
        (self.sampler)(theta, rng)
    }
}

/// Monte Carlo Fisher estimate with entrywise standard errors of the mean.
#[derive(Debug, Clone)]
pub struct FimEstimate {
    pub fisher: FisherMatrix,
    /// Standard error of each entry of the sample mean.
    pub std_error: DMatrix<f64>,
    /// Bound on the floating-point error of the finite differences, averaged
    /// over trials. It is a bias, not a sampling error, and matters where the
    /// per-trial values barely vary.
    pub fd_error: DMatrix<f64>,
    pub trials: usize,
    pub seed: u64,
}

impl FimEstimate {
    /// Largest `|estimate - truth| / (std_error + fd_error)` over all entries.
    pub fn max_z(&self, truth: &DMatrix<f64>) -> f64 {
        let e = self.fisher.entries();
        let mut worst = 0.0f64;
        for i in 0..e.nrows() {
            for j in 0..e.ncols() {
                let tol = 0.5 * (self.std_error[(i, j)] + self.std_error[(j, i)]) + self.fd_error[(i, j)];
                let gap = (e[(i, j)] - truth[(i, j)]).abs();
                worst = worst.max(if tol > 0.0 { gap / tol } else if gap == 0.0 { 0.0 } else { f64::INFINITY });
            }
        }
        worst
    }
}

fn check_mc_args(model: &LogLikelihoodModel, theta: &DVector<f64>, trials: usize, step: f64) -> Result<()> {
    if trials < 2 {
        return Err(CrbError::InvalidArgument(format!("trials = {trials}, need at least 2")));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(CrbError::InvalidArgument(format!("step = {step} must be positive")));
    }
    if theta.len() != model.labels.len() {
        return Err(CrbError::DimensionMismatch(format!(
            "theta has {} entries for {} parameters",
            theta.len(),
            model.labels.len()
        )));
    }
    Ok(())
}

/// One trial's contribution and the rounding bound of its finite differences.
struct TrialValue {
    value: DMatrix<f64>,
    fd_error: DMatrix<f64>,
}

fn score_outer(model: &LogLikelihoodModel, theta: &DVector<f64>, y: &DVector<f64>, step: f64) -> TrialValue {
    let k = theta.len();
    let scale = f64::EPSILON * model.loglik(theta, y).abs();
    let mut s = DVector::zeros(k);
    let mut err = DVector::zeros(k);
    for i in 0..k {
        let h = step_for(theta[i], step);
        let (mut hi, mut lo) = (theta.clone(), theta.clone());
        hi[i] += h;
        lo[i] -= h;
        s[i] = (model.loglik(&hi, y) - model.loglik(&lo, y)) / (2.0 * h);
        err[i] = 4.0 * scale / h;
    }
    let fd_error = DMatrix::from_fn(k, k, |i, j| s[i].abs() * err[j] + s[j].abs() * err[i]);
    TrialValue {
        value: &s * s.transpose(),
        fd_error,
    }
}

fn neg_hessian(model: &LogLikelihoodModel, theta: &DVector<f64>, y: &DVector<f64>, step: f64) -> TrialValue {
    let k = theta.len();
    let l0 = model.loglik(theta, y);
    let scale = f64::EPSILON * l0.abs();
    let shifted = |moves: &[(usize, f64)]| {
        let mut t = theta.clone();
        for &(i, d) in moves {
            t[i] += d;
        }
        model.loglik(&t, y)
    };
    let mut h = DMatrix::zeros(k, k);
    let mut fd_error = DMatrix::zeros(k, k);
    for i in 0..k {
        let hi = step_for(theta[i], step);
        h[(i, i)] = -(shifted(&[(i, hi)]) - 2.0 * l0 + shifted(&[(i, -hi)])) / (hi * hi);
        fd_error[(i, i)] = 8.0 * scale / (hi * hi);
        for j in 0..i {
            let hj = step_for(theta[j], step);
            let v = (shifted(&[(i, hi), (j, hj)]) - shifted(&[(i, hi), (j, -hj)])
                - shifted(&[(i, -hi), (j, hj)])
                + shifted(&[(i, -hi), (j, -hj)]))
                / (4.0 * hi * hj);
            h[(i, j)] = -v;
            h[(j, i)] = -v;
            fd_error[(i, j)] = 2.0 * scale / (hi * hj);
            fd_error[(j, i)] = fd_error[(i, j)];
        }
    }
    TrialValue { value: h, fd_error }
}

/// Running count, mean and sum of squared deviations, merged pairwise.
struct Moments {
    n: f64,
    mean: DMatrix<f64>,
    m2: DMatrix<f64>,
    fd_sum: DMatrix<f64>,
}

impl Moments {
    fn single(t: TrialValue) -> Self {
        let k = t.value.nrows();
        Self {
            n: 1.0,
            mean: t.value,
            m2: DMatrix::zeros(k, k),
            fd_sum: t.fd_error,
        }
    }

    fn merge(self, other: Self) -> Self {
        let n = self.n + other.n;
        let delta = &other.mean - &self.mean;
        let mean = &self.mean + &delta * (other.n / n);
        let m2 = self.m2 + other.m2 + delta.component_mul(&delta) * (self.n * other.n / n);
        Self {
            n,
            mean,
            m2,
            fd_sum: self.fd_sum + other.fd_sum,
        }
    }
}

fn mc_average<F>(model: &LogLikelihoodModel, theta: &DVector<f64>, trials: usize, seed: u64, per_trial: F) -> Result<FimEstimate>
where
    F: Fn(&DVector<f64>) -> TrialValue + Sync,
{
    let moments = map_reduce(
        trials,
        |t| {
            let mut rng = trial_rng(seed, t as u64);
            let y = model.sample(theta, &mut rng);
            Moments::single(per_trial(&y))
        },
        Moments::merge,
    )
    .expect("trials >= 2");
    if moments.mean.iter().any(|x| !x.is_finite()) {
        return Err(CrbError::InvalidSpec(
            "log-likelihood not finite on sampled data".into(),
        ));
    }
    let nf = moments.n;
    let std_error = moments.m2.map(|m2| (m2 / (nf - 1.0) / nf).sqrt());
    let fd_error = moments.fd_sum / nf;
    let mean = moments.mean;
    let sym = 0.5 * (&mean + mean.transpose());
    let fisher = FisherMatrix::new(sym, model.labels.clone()).map_err(|e| match e {
        CrbError::NotPositiveDefinite { min_eigenvalue, .. } => CrbError::NotPositiveDefinite {
            what: format!("estimated Fisher matrix after {trials} trials"),
            min_eigenvalue,
        },
        other => other,
    })?;
    Ok(FimEstimate {
        fisher,
        std_error,
        fd_error,
        trials,
        seed,
    })
}

/// Sample mean of score outer products `s sᵀ`, with `s` by central differences.
pub fn mc_score_fim(model: &LogLikelihoodModel, theta: &DVector<f64>, trials: usize, seed: u64, step: f64) -> Result<FimEstimate> {
    check_mc_args(model, theta, trials, step)?;
    mc_average(model, theta, trials, seed, |y| score_outer(model, theta, y, step))
}

/// Sample mean of negated finite-difference Hessians of the log-likelihood.
///
/// Second differences lose about half the significant digits of `l`, so a
/// step near `1e-4` is a better choice here than [`DEFAULT_STEP`].
pub fn fd_hessian_fim(model: &LogLikelihoodModel, theta: &DVector<f64>, trials: usize, seed: u64, step: f64) -> Result<FimEstimate> {
    check_mc_args(model, theta, trials, step)?;
    mc_average(model, theta, trials, seed, |y| neg_hessian(model, theta, y, step))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_mean_information_is_n_over_v() {
        let m = AdditiveGaussianModel::gaussian_mean(10, 1.0).unwrap();
        let j = gaussian_fim(&m, &DVector::from_element(1, 0.3), false).unwrap();
        assert!((j.entries()[(0, 0)] - 10.0).abs() < 1e-12);
        let jv = gaussian_fim(&m, &DVector::from_element(1, 0.3), true).unwrap();
        assert_eq!(jv.labels(), ["mu", "v"]);
        assert!((jv.entries()[(1, 1)] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn unidentifiable_signal_is_not_pd() {
        let m = AdditiveGaussianModel::new(vec!["a", "b"], 1.0, |t: &DVector<f64>| {
            DVector::from_element(5, t[0] + t[1])
        })
        .unwrap();
        let err = gaussian_fim(&m, &DVector::from_vec(vec![1.0, 2.0]), false).unwrap_err();
        assert!(matches!(err, CrbError::NotPositiveDefinite { .. }));
    }

    #[test]
    fn theta_length_checked() {
        let m = AdditiveGaussianModel::gaussian_mean(4, 1.0).unwrap();
        assert!(gaussian_fim(&m, &DVector::zeros(2), false).is_err());
    }

    #[test]
    fn analytic_and_fd_gradients_agree_on_sine() {
        let m = AdditiveGaussianModel::sine(64, 0.1).unwrap();
        let t = DVector::from_vec(vec![0.4, -0.9, 0.3, 0.8]);
        let a = m.signal_gradient(&t).unwrap();
        let f = m.fd_gradient(&t, DEFAULT_STEP).unwrap();
        for (x, y) in a.iter().zip(f.iter()) {
            assert!((x - y).abs() <= 1e-6 * x.abs().max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn mc_argument_checks() {
        let m = LogLikelihoodModel::from_gaussian(&AdditiveGaussianModel::gaussian_mean(4, 1.0).unwrap(), false);
        let t = DVector::from_element(1, 0.0);
        assert!(mc_score_fim(&m, &t, 1, 0, 1e-5).is_err());
        assert!(mc_score_fim(&m, &t, 10, 0, 0.0).is_err());
        assert!(fd_hessian_fim(&m, &DVector::zeros(2), 10, 0, 1e-4).is_err());
    }

    #[test]
    fn too_few_trials_surface_not_pd() {
        // two parameters, two trials: the score outer-product mean has rank <= 2,
        // but with three parameters it is singular
        let g = AdditiveGaussianModel::new(vec!["a", "b", "c"], 1.0, |t: &DVector<f64>| {
            DVector::from_vec(vec![t[0], t[1], t[2], t[0] + t[1] + t[2]])
        })
        .unwrap();
        let m = LogLikelihoodModel::from_gaussian(&g, false);
        let err = mc_score_fim(&m, &DVector::zeros(3), 2, 1, 1e-5).unwrap_err();
        match err {
            CrbError::NotPositiveDefinite { min_eigenvalue, .. } => assert!(min_eigenvalue.is_some()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn estimates_are_deterministic() {
        let m = LogLikelihoodModel::from_gaussian(&AdditiveGaussianModel::gaussian_mean(5, 2.0).unwrap(), true);
        let t = DVector::from_vec(vec![1.0, 2.0]);
        let a = mc_score_fim(&m, &t, 3000, 42, DEFAULT_STEP).unwrap();
        let b = mc_score_fim(&m, &t, 3000, 42, DEFAULT_STEP).unwrap();
        assert_eq!(a.fisher.entries(), b.fisher.entries());
        assert_eq!(a.std_error, b.std_error);
        let c = mc_score_fim(&m, &t, 3000, 43, DEFAULT_STEP).unwrap();
        assert_ne!(a.fisher.entries(), c.fisher.entries());
    }
}
