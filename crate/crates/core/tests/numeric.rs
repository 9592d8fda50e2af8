mod common;

use std::f64::consts::PI;

use common::*;
use crb_core::models::*;
use crb_core::numeric::*;
use crb_core::*;
use nalgebra::{DMatrix, DVector};

fn worked_lmm() -> LmmSpec {
    LmmSpec::new(
        DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]),
        DMatrix::from_column_slice(3, 1, &[1.0, 1.0, 0.0]),
        1.0,
    )
    .unwrap()
}

fn within_se(est: &FimEstimate, truth: &DMatrix<f64>, n_se: f64) -> Result<(), String> {
    let z = est.max_z(truth);
    if z > n_se {
        return Err(format!("max z {z:.2}: {} vs {}", est.fisher.entries(), truth));
    }
    Ok(())
}

#[test]
fn gaussian_fim_reproduces_lmm_fisher() {
    let mut r = rng(1);
    for _ in 0..20 {
        let spec = LmmSpec::new(gaussian_matrix(&mut r, 7, 2), gaussian_matrix(&mut r, 7, 2), 0.7).unwrap();
        let model = AdditiveGaussianModel::lmm(&spec).unwrap();
        let theta = DVector::from_fn(4, |i, _| i as f64 - 1.5);
        let j = gaussian_fim(&model, &theta, true).unwrap();
        let (jl, _) = lmm_fisher(&spec).unwrap();
        assert_eq!(j.labels(), jl.labels());
        assert!((j.entries() - jl.entries()).amax() <= 1e-12 * jl.entries().amax());
    }
}

#[test]
fn finite_difference_gradient_matches_analytic() {
    let spec = worked_lmm();
    let analytic = AdditiveGaussianModel::lmm(&spec).unwrap();
    let d = spec.design();
    let fd_only = AdditiveGaussianModel::new(vec!["x_0", "z_0"], 1.0, move |t: &DVector<f64>| &d * t).unwrap();
    let theta = DVector::from_vec(vec![0.3, -2.0]);
    let ja = gaussian_fim(&analytic, &theta, false).unwrap();
    let jf = gaussian_fim(&fd_only, &theta, false).unwrap();
    assert!((ja.entries() - jf.entries()).amax() < 1e-6 * ja.entries().amax());

    // a nonlinear signal without an analytic gradient
    let expo = AdditiveGaussianModel::new(vec!["a", "rate"], 0.2, |t: &DVector<f64>| {
        DVector::from_fn(20, |k, _| t[0] * (-t[1] * k as f64 / 10.0).exp())
    })
    .unwrap();
    let t = DVector::from_vec(vec![1.5, 0.7]);
    let fd = expo.signal_gradient(&t).unwrap();
    for k in 0..20 {
        let kf = k as f64 / 10.0;
        let e = (-0.7 * kf).exp();
        assert!((fd[(k, 0)] - e).abs() <= 1e-6 * e.max(1e-3));
        let dr = -1.5 * kf * e;
        assert!((fd[(k, 1)] - dr).abs() <= 1e-6 * dr.abs().max(1e-3));
    }
}

#[test]
fn exact_sine_fim_approaches_dominant() {
    let spec = SineSpec::new(0.6, 0.8, 0.5, 0.3 * PI, 0.01, 10_000).unwrap();
    let model = AdditiveGaussianModel::sine(spec.n(), spec.v()).unwrap();
    let theta = DVector::from_row_slice(&spec.signal_params());
    let exact = gaussian_fim(&model, &theta, true).unwrap();
    let pe = Partition::singletons(&exact);
    let (dom, pd) = sine_fisher_dominant(&spec).unwrap();
    let got = crb_marginal(&exact, &pe, "omega").unwrap().value();
    assert!((got / sine_crb_omega(&spec) - 1.0).abs() < 0.01);
    for name in ["A", "B", "C"] {
        let e = crb_marginal(&exact, &pe, name).unwrap().value();
        let d = crb_marginal(&dom, &pd, name).unwrap().value();
        assert!((e / d - 1.0).abs() < 0.01, "{name}: {e} vs {d}");
    }
}

#[test]
fn score_estimator_matches_gaussian_mean() {
    let g = AdditiveGaussianModel::gaussian_mean(10, 1.0).unwrap();
    let m = LogLikelihoodModel::from_gaussian(&g, false);
    let est = mc_score_fim(&m, &DVector::from_element(1, 0.4), 20_000, 7, DEFAULT_STEP).unwrap();
    within_se(&est, &DMatrix::from_element(1, 1, 10.0), 3.0).unwrap();
}

#[test]
fn hessian_estimator_matches_lmm() {
    let spec = worked_lmm();
    let g = AdditiveGaussianModel::lmm(&spec).unwrap();
    let m = LogLikelihoodModel::from_gaussian(&g, true);
    let theta = DVector::from_vec(vec![1.0, -0.5, 1.0]);
    let (truth, _) = lmm_fisher(&spec).unwrap();
    let est = fd_hessian_fim(&m, &theta, 20_000, 3, 1e-4).unwrap();
    within_se(&est, truth.entries(), 3.0).unwrap();
}

#[test]
fn score_and_hessian_estimators_agree() {
    let spec = worked_lmm();
    let m = LogLikelihoodModel::from_gaussian(&AdditiveGaussianModel::lmm(&spec).unwrap(), true);
    let theta = DVector::from_vec(vec![0.0, 2.0, 1.0]);
    let s = mc_score_fim(&m, &theta, 20_000, 11, DEFAULT_STEP).unwrap();
    let h = fd_hessian_fim(&m, &theta, 20_000, 12, 1e-4).unwrap();
    let (se, he) = (s.fisher.entries(), h.fisher.entries());
    for i in 0..3 {
        for j in 0..3 {
            let combined = s.std_error[(i, j)].hypot(h.std_error[(i, j)]) + s.fd_error[(i, j)] + h.fd_error[(i, j)];
            assert!((se[(i, j)] - he[(i, j)]).abs() <= 3.0 * combined, "({i},{j})");
        }
    }
}

#[test]
fn halving_hessian_step_changes_estimate_below_se() {
    let spec = worked_lmm();
    let m = LogLikelihoodModel::from_gaussian(&AdditiveGaussianModel::lmm(&spec).unwrap(), true);
    let theta = DVector::from_vec(vec![0.5, 0.5, 1.0]);
    let a = fd_hessian_fim(&m, &theta, 5_000, 21, 1e-4).unwrap();
    let b = fd_hessian_fim(&m, &theta, 5_000, 21, 5e-5).unwrap();
    let diff = a.fisher.entries() - b.fisher.entries();
    for i in 0..3 {
        for j in 0..3 {
            // same draws, so only the differentiation error differs
            let tol = a.std_error[(i, j)] + a.fd_error[(i, j)] + b.fd_error[(i, j)];
            assert!(diff[(i, j)].abs() <= tol, "({i},{j}) {}", diff[(i, j)]);
        }
    }
}

#[test]
fn estimators_invariant_under_label_permutation() {
    let spec = worked_lmm();
    let d = spec.design();
    let d_rev = DMatrix::from_fn(3, 2, |i, j| d[(i, 1 - j)]);
    let fwd = LogLikelihoodModel::from_gaussian(
        &AdditiveGaussianModel::new(vec!["x", "z"], 1.0, move |t: &DVector<f64>| &d * t).unwrap(),
        true,
    );
    let rev = LogLikelihoodModel::from_gaussian(
        &AdditiveGaussianModel::new(vec!["z", "x"], 1.0, move |t: &DVector<f64>| &d_rev * t).unwrap(),
        true,
    );
    let tf = DVector::from_vec(vec![0.2, 0.9, 1.0]);
    let tr = DVector::from_vec(vec![0.9, 0.2, 1.0]);
    let perm = [1usize, 0, 2];
    type Estimator = fn(&LogLikelihoodModel, &DVector<f64>, usize, u64, f64) -> crb_core::Result<FimEstimate>;
    let estimators: [Estimator; 2] = [mc_score_fim, fd_hessian_fim];
    for est in estimators {
        let a = est(&fwd, &tf, 2_000, 5, 1e-4).unwrap();
        let b = est(&rev, &tr, 2_000, 5, 1e-4).unwrap();
        let bp = b.fisher.permuted(&perm).unwrap();
        let scale = a.fisher.entries().amax();
        assert!((a.fisher.entries() - bp.entries()).amax() <= 1e-12 * scale);
    }
    let ga = gaussian_fim(&AdditiveGaussianModel::lmm(&spec).unwrap(), &tf.rows(0, 2).into_owned(), true).unwrap();
    assert_eq!(ga.dim(), 3);
}
