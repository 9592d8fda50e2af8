mod common;

use common::*;
use crb_core::models::*;
use crb_core::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn random_lmm(r: &mut impl Rng, n: usize, kx: usize, kz: usize) -> LmmSpec {
    let a = gaussian_matrix(r, n, kx);
    let b = gaussian_matrix(r, n, kz);
    LmmSpec::new(a, b, r.random_range(0.1..3.0)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn inflation_links_conditional_and_marginal(seed in any::<u64>(), kx in 1usize..4, kz in 1usize..4, extra in 1usize..6) {
        let mut r = rng(seed);
        let spec = random_lmm(&mut r, kx + kz + extra, kx, kz);
        let (j, p) = lmm_fisher(&spec).unwrap();
        let log_f = lmm_log_inflation(&spec).unwrap();
        let cond = crb_conditional(&j, &p, "x", &["z", "v"]).unwrap().log_value;
        let marg = crb_marginal(&j, &p, "x").unwrap().log_value;
        prop_assert!(close(log_f + cond, marg, 1e-8));
        let b = bayes_factor(&j, &p, "x", "z").unwrap();
        prop_assert!(close(b.log_factor, log_f, 1e-8));
        prop_assert!(log_f >= -1e-10);
        prop_assert!(independence_check(&j, &p, "x", "v", 0.0).unwrap());
    }

    #[test]
    fn appending_rows_never_raises_bound(seed in any::<u64>(), kx in 1usize..4, kz in 1usize..4, m in 1usize..5) {
        let mut r = rng(seed);
        let n = kx + kz + 1;
        let spec = random_lmm(&mut r, n, kx, kz);
        let a2 = gaussian_matrix(&mut r, m, kx);
        let b2 = gaussian_matrix(&mut r, m, kz);
        let grown = LmmSpec::new(
            vstack(spec.a(), &a2),
            vstack(spec.b(), &b2),
            spec.v(),
        ).unwrap();
        let (j0, p0) = lmm_fisher(&spec).unwrap();
        let (j1, p1) = lmm_fisher(&grown).unwrap();
        let before = crb_marginal(&j0, &p0, "x").unwrap().log_value;
        let after = crb_marginal(&j1, &p1, "x").unwrap().log_value;
        prop_assert!(after <= before + 1e-10 * before.abs().max(1.0));
    }

    #[test]
    fn sine_omega_ratio_in_unit_to_four(a in -3.0f64..3.0, b in -3.0f64..3.0, n in 8usize..5000, v in 1e-4f64..10.0) {
        prop_assume!(a * a + b * b > 1e-6);
        let spec = SineSpec::new(a, b, 0.0, 1.0, v, n).unwrap();
        let (j, p) = sine_fisher_dominant(&spec).unwrap();
        let ratio = crb_marginal(&j, &p, "omega").unwrap().log_value
            - crb_conditional(&j, &p, "omega", &["A"]).unwrap().log_value;
        let expected = 1.0 + 3.0 * b * b / (a * a + b * b);
        prop_assert!((ratio.exp() / expected - 1.0).abs() < 1e-10);
        prop_assert!((1.0..=4.0).contains(&expected));
        let f = sine_inflation_factors(&spec);
        prop_assert!((f.a + f.b - 5.0).abs() < 1e-12);
        let g = sine_inflation_from_fisher(&spec).unwrap();
        prop_assert!((g.a / f.a - 1.0).abs() < 1e-8 && (g.b / f.b - 1.0).abs() < 1e-8 && (g.c - 1.0).abs() < 1e-8);
    }

    #[test]
    fn reparameterization_is_a_group_action(seed in any::<u64>(), k in 1usize..6) {
        let mut r = rng(seed);
        let j = random_fisher(&mut r, k, 1e3);
        let mid: Vec<String> = (0..k).map(|i| format!("m{i}")).collect();
        let out: Vec<String> = (0..k).map(|i| format!("o{i}")).collect();
        let g1 = Jacobian::new(random_spd(&mut r, k, 10.0) + gaussian_matrix(&mut r, k, k) * 0.1, labels(k), mid.clone()).unwrap();
        let g2 = Jacobian::new(random_spd(&mut r, k, 10.0), mid, out).unwrap();
        let stepwise = reparameterize(&reparameterize(&j, &g1).unwrap(), &g2).unwrap();
        let direct = reparameterize(&j, &g1.then(&g2).unwrap()).unwrap();
        let scale = direct.entries().amax();
        prop_assert!((stepwise.entries() - direct.entries()).amax() <= 1e-8 * scale);
        // log-det perturbation is bounded by cond(J) times the relative entry error
        let eig = direct.entries().clone().symmetric_eigenvalues();
        let cond = eig.amax() / eig.amin();
        prop_assert!((stepwise.log_det() - direct.log_det()).abs() <= 1e-14 * cond.max(1e6));
    }
}

fn vstack(top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.rows_mut(0, top.nrows()).copy_from(top);
    out.rows_mut(top.nrows(), bottom.nrows()).copy_from(bottom);
    out
}

#[test]
fn inflation_is_one_exactly_when_columns_orthogonal() {
    let mut r = rng(9);
    for _ in 0..50 {
        let a = gaussian_matrix(&mut r, 8, 2);
        let b = gaussian_matrix(&mut r, 8, 3);
        let b_perp = orth_projector(&a).unwrap() * &b;
        let orth = LmmSpec::new(a.clone(), b_perp, 0.5).unwrap();
        assert!((lmm_inflation(&orth).unwrap() - 1.0).abs() < 1e-10);
        let general = LmmSpec::new(a, b, 0.5).unwrap();
        assert!(lmm_inflation(&general).unwrap() > 1.0 + 1e-6);
    }
}

#[test]
fn projector_is_idempotent_and_annihilates() {
    let mut r = rng(2);
    for _ in 0..30 {
        let n = r.random_range(3..12);
        let k = r.random_range(1..n);
        let a = gaussian_matrix(&mut r, n, k);
        let p = orth_projector(&a).unwrap();
        assert!((&p - p.transpose()).amax() < 1e-12);
        assert!((&p * &p - &p).amax() < 1e-10);
        assert!((&p * &a).amax() < 1e-10 * a.amax());
    }
}

#[test]
fn worked_lmm_instance() {
    let a = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
    let b = DMatrix::from_column_slice(3, 1, &[1.0, 1.0, 0.0]);
    let spec = LmmSpec::new(a, b, 1.0).unwrap();
    assert!((lmm_inflation(&spec).unwrap() - 2.0).abs() < 1e-10);
    let (j, p) = lmm_fisher(&spec).unwrap();
    let marg = crb_marginal(&j, &p, "x").unwrap();
    let cond = crb_conditional(&j, &p, "x", &["z"]).unwrap();
    assert!((marg.value() - 2.0 * cond.value()).abs() < 1e-12);
}
