//! Cramér-Rao bounds over partitioned Fisher information matrices.
//!
//! The crate computes joint, conditional and marginal bounds from a labeled
//! Fisher matrix, factorizes joint bounds with the chain rule, and measures
//! how much an unknown nuisance block inflates the bound on a block of
//! interest. Closed-form Fisher matrices for a linear mixed model and a
//! sampled sinusoid live in [`models`], numerical Fisher estimators in
//! [`numeric`], and Monte Carlo estimator checks in [`validate`].

pub mod error;
pub mod fisher;
pub mod linalg;
pub mod models;
pub mod numeric;
pub mod rng;
pub mod validate;

pub use error::{CrbError, Result};
pub use fisher::{
    bayes_factor, chain_decompose, crb_conditional, crb_joint, crb_marginal, independence_check,
    make_fisher, schur_complement, BayesFactor, ChainFactor, CrbValue, FisherMatrix, Partition,
};
