//! Closed-form Fisher matrices for the linear mixed model and the sampled
//! sinusoid, plus reparameterization by a Jacobian.

pub mod jacobian;
pub mod lmm;
pub mod sine;

pub use jacobian::{reparameterize, Jacobian};
pub use lmm::{lmm_fisher, lmm_inflation, lmm_log_inflation, orth_projector, LmmSpec};
pub use sine::{
    sine_crb_omega, sine_crb_omega_given_a, sine_fisher_dominant, sine_inflation_factors,
    sine_inflation_from_fisher, sine_signal, sine_signal_gradient, SineInflation, SineSpec,
};
