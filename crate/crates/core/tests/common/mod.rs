//! Test-only helpers: random SPD matrices and a brute-force bound oracle that
//! inverts the full matrix with LU and reads sub-blocks, independent of the
//! Cholesky/Schur path used by the library.
#![allow(dead_code)]

use crb_core::{FisherMatrix, Partition};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut impl Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| crb_core::rng::std_normal(rng))
}

/// `Q diag(λ) Qᵀ` with `λ` log-uniform in `[scale, scale * cond]`, both ends hit.
pub fn random_spd(rng: &mut impl Rng, k: usize, cond: f64) -> DMatrix<f64> {
    let q = gaussian_matrix(rng, k, k).qr().q();
    let scale = 10f64.powf(rng.random_range(-2.0..2.0));
    let mut lam: Vec<f64> = (0..k)
        .map(|_| scale * cond.powf(rng.random_range(0.0..1.0)))
        .collect();
    lam[0] = scale;
    if k > 1 {
        lam[1] = scale * cond;
    }
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(lam));
    let m = &q * d * q.transpose();
    0.5 * (&m + m.transpose())
}

pub fn labels(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("p{i}")).collect()
}

pub fn random_fisher(rng: &mut impl Rng, k: usize, cond: f64) -> FisherMatrix {
    FisherMatrix::new(random_spd(rng, k, cond), labels(k)).expect("random SPD")
}

/// Splits a shuffled `0..k` into `m` non-empty, generally non-contiguous blocks
/// named `b0..`.
pub fn random_partition(rng: &mut impl Rng, k: usize, m: usize) -> Partition {
    assert!(m <= k && m > 0);
    let mut ix: Vec<usize> = (0..k).collect();
    ix.shuffle(rng);
    let mut cuts: Vec<usize> = (1..k).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(m - 1).collect();
    cuts.sort_unstable();
    let mut blocks = Vec::new();
    let mut start = 0;
    for (b, &c) in cuts.iter().chain(std::iter::once(&k)).enumerate() {
        blocks.push((format!("b{b}"), ix[start..c].to_vec()));
        start = c;
    }
    Partition::new(k, blocks).unwrap()
}

fn sub(m: &DMatrix<f64>, ix: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(ix.len(), ix.len(), |i, j| m[(ix[i], ix[j])])
}

fn lu_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().lu().try_inverse().expect("invertible")
}

/// `ln |((J with `known` deleted)^{-1})_{interest}|` by explicit inversion.
pub fn oracle_log_crb(j: &DMatrix<f64>, interest: &[usize], known: &[usize]) -> f64 {
    let remaining: Vec<usize> = (0..j.nrows()).filter(|i| !known.contains(i)).collect();
    let reduced = sub(j, &remaining);
    let inv = lu_inverse(&reduced);
    let pos: Vec<usize> = interest
        .iter()
        .map(|i| remaining.iter().position(|r| r == i).unwrap())
        .collect();
    sub(&inv, &pos).lu().determinant().ln()
}

pub fn block_ix(p: &Partition, names: &[&str]) -> Vec<usize> {
    names
        .iter()
        .flat_map(|n| p.indices(n).unwrap().to_vec())
        .collect()
}

/// `|a - b| <= tol * max(1, |b|)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}
