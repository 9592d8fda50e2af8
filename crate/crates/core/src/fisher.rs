//! Partitioned Fisher information algebra.
//!
//! A [`FisherMatrix`] is a labeled symmetric positive-definite matrix. A
//! [`Partition`] groups its parameters into named blocks (index sets that need
//! not be contiguous). Every bound is returned as a [`CrbValue`], which keeps
//! the natural log of the determinant so that large or badly scaled problems
//! neither overflow nor underflow.
//!
//! Conventions for blocks that are neither of interest nor known: they are
//! unknown nuisance parameters and get Schur-eliminated. Known blocks have
//! their rows and columns deleted before elimination. Parameters that belong
//! to no block are always unknown.

use std::collections::HashSet;
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{CrbError, Result};
use crate::linalg;

/// Relative tolerance on `max|M - Mᵀ| / max|M|` accepted at construction.
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    entries: DMatrix<f64>,
    labels: Vec<String>,
    log_det: f64,
}

impl FisherMatrix {
    /// Validates and symmetrizes `entries`.
    ///
    /// The input is averaged with its transpose after the asymmetry check, so
    /// round-off from file I/O is tolerated. Positive definiteness is checked
    /// once here with a Cholesky factorization.
    pub fn new<S: Into<String>>(entries: DMatrix<f64>, labels: Vec<S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if !entries.is_square() {
            return Err(CrbError::DimensionMismatch(format!(
                "matrix is {}x{}, expected square",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if labels.len() != entries.nrows() {
            return Err(CrbError::DimensionMismatch(format!(
                "{} labels for a {}x{} matrix",
                labels.len(),
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.nrows() == 0 {
            return Err(CrbError::DimensionMismatch("empty matrix".into()));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(CrbError::DimensionMismatch(format!("duplicate label `{l}`")));
            }
        }
        let scale = entries.amax();
        let asym = (&entries - entries.transpose()).amax();
        if !asym.is_finite() || !scale.is_finite() || asym > SYMMETRY_TOL * scale {
            return Err(CrbError::NotSymmetric {
                asymmetry: if scale > 0.0 { asym / scale } else { asym },
            });
        }
        let entries = 0.5 * (&entries + entries.transpose());
        let log_det = linalg::log_det_spd(&entries, "Fisher matrix")?;
        Ok(Self {
            entries,
            labels,
            log_det,
        })
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// `ln |J|`.
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Eigenvalue condition number, for screening ill-conditioned inputs.
    pub fn condition_number(&self) -> f64 {
        linalg::condition_number(&self.entries)
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        // PD was established at construction.
        self.entries
            .clone()
            .cholesky()
            .expect("validated SPD")
            .inverse()
    }

    /// Reorders parameters so that new index `i` holds old index `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.dim())?;
        let entries = linalg::select(&self.entries, perm, perm);
        let labels = perm.iter().map(|&i| self.labels[i].clone()).collect();
        Self::new(entries, labels)
    }

    /// Restriction to a subset of parameters, in the given order.
    pub fn restricted(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.dim()) {
            return Err(CrbError::DimensionMismatch(format!("index {bad} out of range")));
        }
        let entries = linalg::select(&self.entries, indices, indices);
        let labels = indices.iter().map(|&i| self.labels[i].clone()).collect();
        Self::new(entries, labels)
    }
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(CrbError::DimensionMismatch(format!(
            "permutation of length {} for dimension {n}",
            perm.len()
        )));
    }
    for &p in perm {
        if p >= n || seen[p] {
            return Err(CrbError::DimensionMismatch("not a permutation".into()));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Ordered, disjoint, non-empty named index blocks over `0..dim`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    dim: usize,
    blocks: Vec<(String, Vec<usize>)>,
}

impl Partition {
    pub fn new<S: Into<String>>(dim: usize, blocks: Vec<(S, Vec<usize>)>) -> Result<Self> {
        let blocks: Vec<(String, Vec<usize>)> =
            blocks.into_iter().map(|(n, ix)| (n.into(), ix)).collect();
        let mut names = HashSet::new();
        let mut used = vec![false; dim];
        for (name, ix) in &blocks {
            if !names.insert(name.as_str()) {
                return Err(CrbError::InvalidPartition(format!("duplicate block `{name}`")));
            }
            if ix.is_empty() {
                return Err(CrbError::InvalidPartition(format!("block `{name}` is empty")));
            }
            for &i in ix {
                if i >= dim {
                    return Err(CrbError::InvalidPartition(format!(
                        "block `{name}` index {i} out of range 0..{dim}"
                    )));
                }
                if used[i] {
                    return Err(CrbError::InvalidPartition(format!(
                        "index {i} appears in more than one block"
                    )));
                }
                used[i] = true;
            }
        }
        Ok(Self { dim, blocks })
    }

    /// One block per parameter, named after the parameter label.
    pub fn singletons(j: &FisherMatrix) -> Self {
        Self {
            dim: j.dim(),
            blocks: j
                .labels()
                .iter()
                .enumerate()
                .map(|(i, l)| (l.clone(), vec![i]))
                .collect(),
        }
    }

    /// Builds blocks from parameter labels instead of indices.
    pub fn from_labels<S: AsRef<str>, L: AsRef<str>>(
        j: &FisherMatrix,
        blocks: &[(S, Vec<L>)],
    ) -> Result<Self> {
        let mut out = Vec::with_capacity(blocks.len());
        for (name, labels) in blocks {
            let ix = labels
                .iter()
                .map(|l| {
                    j.index_of(l.as_ref()).ok_or_else(|| {
                        CrbError::InvalidPartition(format!("unknown parameter `{}`", l.as_ref()))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            out.push((name.as_ref().to_string(), ix));
        }
        Self::new(j.dim(), out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[(String, Vec<usize>)] {
        &self.blocks
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.blocks.iter().map(|(n, _)| n.as_str())
    }

    pub fn indices(&self, name: &str) -> Result<&[usize]> {
        self.blocks
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, ix)| ix.as_slice())
            .ok_or_else(|| CrbError::UnknownBlock(name.to_string()))
    }

    fn union<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for n in names {
            let n = n.as_ref();
            if !seen.insert(n) {
                return Err(CrbError::InvalidArgument(format!("block `{n}` listed twice")));
            }
            out.extend_from_slice(self.indices(n)?);
        }
        Ok(out)
    }

    fn check_against(&self, j: &FisherMatrix) -> Result<()> {
        if self.dim != j.dim() {
            return Err(CrbError::DimensionMismatch(format!(
                "partition over {} parameters, matrix has {}",
                self.dim,
                j.dim()
            )));
        }
        Ok(())
    }
}

/// A Cramér-Rao bound `|·^{-1}|`, kept in log space.
#[derive(Debug, Clone, PartialEq)]
pub struct CrbValue {
    pub log_value: f64,
    /// Blocks whose joint error volume is bounded.
    pub interest: Vec<String>,
    /// Blocks treated as known.
    pub known: Vec<String>,
    /// Number of scalar parameters covered by `interest`.
    pub dim: usize,
}

impl CrbValue {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }

    /// `CRB(a,b|c)` style name.
    pub fn name(&self) -> String {
        let interest = self.interest.join(",");
        if self.known.is_empty() {
            format!("CRB({interest})")
        } else {
            format!("CRB({interest}|{})", self.known.join(","))
        }
    }
}

impl fmt::Display for CrbValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {:.6e} (log {:.12})", self.name(), self.value(), self.log_value)
    }
}

/// Same as [`FisherMatrix::new`].
pub fn make_fisher<S: Into<String>>(entries: DMatrix<f64>, labels: Vec<S>) -> Result<FisherMatrix> {
    FisherMatrix::new(entries, labels)
}

fn complement(dim: usize, remove: &[usize]) -> Vec<usize> {
    let mut mask = vec![true; dim];
    for &i in remove {
        mask[i] = false;
    }
    (0..dim).filter(|&i| mask[i]).collect()
}

/// Effective information about `keep` after eliminating every other parameter.
pub fn schur_complement(j: &FisherMatrix, p: &Partition, keep: &str) -> Result<DMatrix<f64>> {
    p.check_against(j)?;
    let kept = p.indices(keep)?;
    let rest = complement(j.dim(), kept);
    if rest.is_empty() {
        return Err(CrbError::EmptyComplement(keep.to_string()));
    }
    linalg::schur(
        j.entries(),
        kept,
        &rest,
        &format!("information block eliminated against `{keep}`"),
    )
}

/// `-ln|S|` where `S` is the Schur complement of `interest` after deleting
/// `known` rows and columns.
fn log_crb(j: &FisherMatrix, interest: &[usize], known: &[usize], label: &str) -> Result<f64> {
    let mut removed = known.to_vec();
    removed.extend_from_slice(interest);
    let elim = complement(j.dim(), &removed);
    if elim.is_empty() && known.is_empty() {
        return Ok(-j.log_det());
    }
    let s = linalg::schur(j.entries(), interest, &elim, &format!("nuisance block for {label}"))?;
    Ok(-linalg::log_det_spd(&s, &format!("Schur complement for {label}"))?)
}

/// Joint bound on the named blocks, every other parameter unknown.
pub fn crb_joint<S: AsRef<str>>(j: &FisherMatrix, p: &Partition, blocks: &[S]) -> Result<CrbValue> {
    p.check_against(j)?;
    if blocks.is_empty() {
        return Err(CrbError::InvalidArgument("no blocks of interest".into()));
    }
    let ix = p.union(blocks)?;
    let interest: Vec<String> = blocks.iter().map(|b| b.as_ref().to_string()).collect();
    let label = format!("CRB({})", interest.join(","));
    Ok(CrbValue {
        log_value: log_crb(j, &ix, &[], &label)?,
        dim: ix.len(),
        interest,
        known: Vec::new(),
    })
}

/// Bound on `interest` with the `known` blocks removed from the unknown set.
pub fn crb_conditional<S: AsRef<str>>(
    j: &FisherMatrix,
    p: &Partition,
    interest: &str,
    known: &[S],
) -> Result<CrbValue> {
    p.check_against(j)?;
    if known.iter().any(|k| k.as_ref() == interest) {
        return Err(CrbError::InvalidArgument(format!(
            "block `{interest}` cannot be both of interest and known"
        )));
    }
    let ix = p.indices(interest)?;
    let known_ix = p.union(known)?;
    let value = CrbValue {
        log_value: 0.0,
        interest: vec![interest.to_string()],
        known: known.iter().map(|k| k.as_ref().to_string()).collect(),
        dim: ix.len(),
    };
    let label = value.name();
    Ok(CrbValue {
        log_value: log_crb(j, ix, &known_ix, &label)?,
        ..value
    })
}

/// Bound on `interest` with every other parameter unknown.
pub fn crb_marginal(j: &FisherMatrix, p: &Partition, interest: &str) -> Result<CrbValue> {
    crb_conditional::<&str>(j, p, interest, &[])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainFactor {
    pub block: String,
    pub crb: CrbValue,
}

/// Recursive chain-rule factorization of the joint bound over all blocks.
///
/// Factor `i` is `CRB(b_i | b_{i+1}, …, b_m)`: later blocks known, earlier
/// ones unknown. The log-values sum to `crb_joint` over every block.
pub fn chain_decompose<S: AsRef<str>>(
    j: &FisherMatrix,
    p: &Partition,
    order: &[S],
) -> Result<Vec<ChainFactor>> {
    p.check_against(j)?;
    let names: Vec<&str> = order.iter().map(AsRef::as_ref).collect();
    let mut sorted_order = names.clone();
    sorted_order.sort_unstable();
    let mut sorted_blocks: Vec<&str> = p.names().collect();
    sorted_blocks.sort_unstable();
    if sorted_order != sorted_blocks {
        return Err(CrbError::InvalidOrder(format!(
            "[{}] is not a permutation of [{}]",
            names.join(","),
            p.names().collect::<Vec<_>>().join(",")
        )));
    }
    names
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            Ok(ChainFactor {
                block: b.to_string(),
                crb: crb_conditional(j, p, b, &names[i + 1..])?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesFactor {
    /// `CRB(other) / CRB(other | interest)`.
    pub factor: f64,
    pub log_factor: f64,
    /// `CRB(interest)`.
    pub lhs: CrbValue,
    /// `CRB(interest | other) · factor`.
    pub rhs_product: CrbValue,
}

/// Inflation of the bound on `interest` caused by not knowing `other`.
pub fn bayes_factor(j: &FisherMatrix, p: &Partition, interest: &str, other: &str) -> Result<BayesFactor> {
    if interest == other {
        return Err(CrbError::InvalidArgument(format!(
            "interest and other are both `{interest}`"
        )));
    }
    let other_marg = crb_marginal(j, p, other)?;
    let other_cond = crb_conditional(j, p, other, &[interest])?;
    let log_factor = other_marg.log_value - other_cond.log_value;
    let lhs = crb_marginal(j, p, interest)?;
    let cond = crb_conditional(j, p, interest, &[other])?;
    let rhs_product = CrbValue {
        log_value: cond.log_value + log_factor,
        ..lhs.clone()
    };
    Ok(BayesFactor {
        factor: log_factor.exp(),
        log_factor,
        lhs,
        rhs_product,
    })
}

/// True when every cross entry `J_ij` between blocks `a` and `b` satisfies
/// `|J_ij| <= tol * sqrt(J_ii J_jj)`.
pub fn independence_check(j: &FisherMatrix, p: &Partition, a: &str, b: &str, tol: f64) -> Result<bool> {
    p.check_against(j)?;
    if a == b {
        return Err(CrbError::InvalidArgument(format!("blocks are both `{a}`")));
    }
    let (ia, ib) = (p.indices(a)?, p.indices(b)?);
    let m = j.entries();
    Ok(ia.iter().all(|&r| {
        ib.iter()
            .all(|&c| m[(r, c)].abs() <= tol * (m[(r, r)] * m[(c, c)]).sqrt())
    }))
}
