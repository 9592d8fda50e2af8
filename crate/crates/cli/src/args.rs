use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::OutputFormat;

#[derive(Debug, Parser)]
#[command(name = "crb", version, about = "Cramér-Rao bounds over partitioned Fisher information matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Input and run settings shared by every subcommand. Exactly one of
/// `--matrix`, `--model` and `--config` must be given.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Fisher matrix: a nested row-major array or {"fisher", "labels", "partition"}
    #[arg(long, value_name = "FILE")]
    pub matrix: Option<PathBuf>,

    /// Model file ({"kind": "matrix" | "lmm" | "sine" | "gaussian_mean", ...}) or a full config
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,

    /// Analysis config: {"model", "partition", "requests", "output", "seed", "trials"}
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Base seed for Monte Carlo runs [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,

    /// Monte Carlo trial count
    #[arg(long)]
    pub trials: Option<usize>,

    /// Report format [default: text]
    #[arg(long, value_enum)]
    pub output: Option<OutputFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Estimator {
    /// Analytic FIM of the additive Gaussian model
    Exact,
    /// Monte Carlo mean of score outer products
    Score,
    /// Monte Carlo mean of the negated finite-difference Hessian
    Hessian,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Joint bound over a set of blocks, all others unknown
    Joint {
        #[command(flatten)]
        common: Common,
        /// Blocks to bound jointly [default: all]
        #[arg(long, value_delimiter = ',')]
        blocks: Vec<String>,
    },
    /// Bound on one block with every other block unknown
    Marginal {
        #[command(flatten)]
        common: Common,
        /// Block of interest [default: every block in turn]
        #[arg(long)]
        interest: Option<String>,
    },
    /// Bound on one block with some blocks known
    Conditional {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        interest: Option<String>,
        /// Blocks treated as known
        #[arg(long, value_delimiter = ',')]
        known: Vec<String>,
    },
    /// Chain-rule factorization of the joint bound
    Chain {
        #[command(flatten)]
        common: Common,
        /// Block order; factor i conditions on the blocks after it [default: partition order]
        #[arg(long, value_delimiter = ',')]
        order: Vec<String>,
    },
    /// Inflation of the bound on one block caused by not knowing another
    Bayes {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        interest: Option<String>,
        #[arg(long)]
        other: Option<String>,
    },
    /// Whether two blocks are decoupled in the Fisher matrix
    Independence {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        interest: Option<String>,
        #[arg(long)]
        other: Option<String>,
        /// Largest |J_ij| / sqrt(J_ii J_jj) still counted as zero
        #[arg(long, default_value_t = crate::config::DEFAULT_INDEPENDENCE_TOL)]
        tol: f64,
    },
    /// Linear mixed model y = Ax + Bz + e bounds
    Lmm {
        #[command(flatten)]
        common: Common,
        /// Report only the nuisance inflation factor |BᵀB| / |BᵀΠ⊥B|
        #[arg(long)]
        inflation: bool,
    },
    /// Sine-wave frequency bounds and inflation factors
    Sine {
        #[command(flatten)]
        common: Common,
    },
    /// Fisher matrix of a generative model, analytic or estimated
    Fim {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Estimator::Exact)]
        estimator: Estimator,
        /// Finite-difference step [default: 1e-5 for score, 1e-4 for hessian]
        #[arg(long)]
        step: Option<f64>,
    },
    /// Monte Carlo check of estimator MSE against the bounds
    Validate {
        #[command(flatten)]
        common: Common,
        /// Relative slack on the generalized variance before a verdict flips
        #[arg(long)]
        slack: Option<f64>,
    },
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Joint { common, .. }
            | Command::Marginal { common, .. }
            | Command::Conditional { common, .. }
            | Command::Chain { common, .. }
            | Command::Bayes { common, .. }
            | Command::Independence { common, .. }
            | Command::Lmm { common, .. }
            | Command::Sine { common }
            | Command::Fim { common, .. }
            | Command::Validate { common, .. } => common,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Joint { .. } => "joint",
            Command::Marginal { .. } => "marginal",
            Command::Conditional { .. } => "conditional",
            Command::Chain { .. } => "chain",
            Command::Bayes { .. } => "bayes",
            Command::Independence { .. } => "independence",
            Command::Lmm { .. } => "lmm",
            Command::Sine { .. } => "sine",
            Command::Fim { .. } => "fim",
            Command::Validate { .. } => "validate",
        }
    }
}
