//! JSON input files.
//!
//! Matrices are row-major nested arrays, labels are string arrays and
//! partitions are objects mapping block names to index arrays. A model file
//! is a single tagged object (`{"kind": "lmm", ...}`); a config file wraps one
//! under `"model"` together with an optional partition, requests and run
//! settings.

use std::fs;
use std::path::Path;

use clap::ValueEnum;
use crb_core::models::{lmm_fisher, reparameterize, sine_fisher_dominant, Jacobian, LmmSpec, SineSpec};
use crb_core::numeric::{gaussian_fim, AdditiveGaussianModel};
use crb_core::{FisherMatrix, Partition};
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameterization {
    #[default]
    Cartesian,
    AmplitudePhase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SineFim {
    /// Large-n approximation with closed-form entries.
    #[default]
    Dominant,
    /// Finite-n FIM from the signal gradient.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Matrix {
        #[serde(alias = "matrix")]
        fisher: Vec<Vec<f64>>,
        #[serde(default)]
        labels: Option<Vec<String>>,
    },
    Lmm {
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        v: f64,
        /// True parameter values, used by `fim` and `validate`. Zero if absent.
        #[serde(default)]
        x: Option<Vec<f64>>,
        #[serde(default)]
        z: Option<Vec<f64>>,
    },
    Sine {
        #[serde(rename = "A")]
        a: f64,
        #[serde(rename = "B")]
        b: f64,
        #[serde(rename = "C")]
        c: f64,
        omega: f64,
        v: f64,
        n: usize,
        #[serde(default)]
        parameterization: Parameterization,
        #[serde(default)]
        fim: SineFim,
    },
    GaussianMean {
        n: usize,
        v: f64,
        #[serde(default)]
        mu: f64,
    },
}

impl ModelSpec {
    pub fn describe(&self) -> String {
        match self {
            ModelSpec::Matrix { fisher, .. } => format!("matrix ({0}x{0})", fisher.len()),
            ModelSpec::Lmm { a, .. } => format!("lmm (n = {})", a.len()),
            ModelSpec::Sine { n, parameterization, fim, .. } => {
                let p = match parameterization {
                    Parameterization::Cartesian => "cartesian",
                    Parameterization::AmplitudePhase => "amplitude/phase",
                };
                let f = match fim {
                    SineFim::Dominant => "dominant",
                    SineFim::Exact => "exact",
                };
                format!("sine (n = {n}, {p}, {f} FIM)")
            }
            ModelSpec::GaussianMean { n, .. } => format!("gaussian_mean (n = {n})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Request {
    Joint {
        blocks: Vec<String>,
    },
    Marginal {
        interest: String,
    },
    Conditional {
        interest: String,
        #[serde(default)]
        known: Vec<String>,
    },
    Chain {
        order: Vec<String>,
    },
    Bayes {
        interest: String,
        other: String,
    },
    Independence {
        interest: String,
        other: String,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    McExperiment {
        #[serde(default)]
        slack: Option<f64>,
    },
}

pub const DEFAULT_INDEPENDENCE_TOL: f64 = 1e-12;

fn default_tol() -> f64 {
    DEFAULT_INDEPENDENCE_TOL
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub partition: Option<Map<String, Value>>,
    #[serde(default)]
    pub requests: Vec<Request>,
    #[serde(default)]
    pub output: Option<OutputFormat>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub trials: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixFile {
    #[serde(alias = "matrix")]
    fisher: Vec<Vec<f64>>,
    #[serde(default)]
    labels: Option<Vec<String>>,
    #[serde(default)]
    partition: Option<Map<String, Value>>,
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn parse<T: for<'de> Deserialize<'de>>(value: Value, path: &Path) -> Result<T, CliError> {
    serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Loads a config or bare model file.
pub fn load_config(path: &Path) -> Result<AnalysisConfig, CliError> {
    let value = read_json(path)?;
    match &value {
        Value::Object(obj) if obj.contains_key("model") => parse(value, path),
        Value::Object(obj) if obj.contains_key("kind") => Ok(AnalysisConfig {
            model: parse(value, path)?,
            partition: None,
            requests: Vec::new(),
            output: None,
            seed: None,
            trials: None,
        }),
        _ => Err(CliError::Config(format!(
            "{}: expected an object with `model` or `kind`",
            path.display()
        ))),
    }
}

/// Loads a Fisher matrix file: a bare nested array or `{"fisher", "labels", "partition"}`.
pub fn load_matrix(path: &Path) -> Result<AnalysisConfig, CliError> {
    let value = read_json(path)?;
    let file: MatrixFile = if value.is_array() {
        MatrixFile {
            fisher: parse(value, path)?,
            labels: None,
            partition: None,
        }
    } else {
        parse(value, path)?
    };
    Ok(AnalysisConfig {
        model: ModelSpec::Matrix {
            fisher: file.fisher,
            labels: file.labels,
        },
        partition: file.partition,
        requests: Vec::new(),
        output: None,
        seed: None,
        trials: None,
    })
}

pub(crate) fn to_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, CliError> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 {
        return Err(CliError::Config(format!("{what} is empty")));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != ncols) {
        return Err(CliError::Config(format!(
            "{what}: row {i} has {} entries, row 0 has {ncols}",
            rows[i].len()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// A model resolved into its Fisher matrix and block partition.
pub struct Built {
    pub fisher: FisherMatrix,
    pub partition: Partition,
}

/// LMM spec with the true `x` and `z`.
pub type LmmTruth = (LmmSpec, DVector<f64>, DVector<f64>);

pub fn lmm_spec(model: &ModelSpec) -> Result<Option<LmmTruth>, CliError> {
    let ModelSpec::Lmm { a, b, v, x, z } = model else {
        return Ok(None);
    };
    let spec = LmmSpec::new(to_matrix(a, "a")?, to_matrix(b, "b")?, *v)?;
    let truth = |given: &Option<Vec<f64>>, k: usize, name: &str| match given {
        None => Ok(DVector::zeros(k)),
        Some(t) if t.len() == k => Ok(DVector::from_column_slice(t)),
        Some(t) => Err(CliError::Config(format!("{name} has {} entries, expected {k}", t.len()))),
    };
    let x = truth(x, spec.kx(), "x")?;
    let z = truth(z, spec.kz(), "z")?;
    Ok(Some((spec, x, z)))
}

pub fn sine_spec(model: &ModelSpec) -> Result<Option<SineSpec>, CliError> {
    let ModelSpec::Sine { a, b, c, omega, v, n, .. } = *model else {
        return Ok(None);
    };
    Ok(Some(SineSpec::new(a, b, c, omega, v, n)?))
}

pub fn build(config: &AnalysisConfig) -> Result<Built, CliError> {
    let (fisher, default_partition) = match &config.model {
        ModelSpec::Matrix { fisher, labels } => {
            let m = to_matrix(fisher, "fisher")?;
            let labels = match labels {
                Some(l) => l.clone(),
                None => (0..m.nrows()).map(|i| format!("theta{i}")).collect(),
            };
            let j = FisherMatrix::new(m, labels)?;
            let p = Partition::singletons(&j);
            (j, p)
        }
        model @ ModelSpec::Lmm { .. } => {
            let (spec, _, _) = lmm_spec(model)?.expect("lmm model");
            lmm_fisher(&spec)?
        }
        model @ ModelSpec::Sine { parameterization, fim, .. } => {
            let spec = sine_spec(model)?.expect("sine model");
            let j = match fim {
                SineFim::Dominant => sine_fisher_dominant(&spec)?.0,
                SineFim::Exact => {
                    let g = AdditiveGaussianModel::sine(spec.n(), spec.v())?;
                    gaussian_fim(&g, &DVector::from_row_slice(&spec.signal_params()), true)?
                }
            };
            let j = match parameterization {
                Parameterization::Cartesian => j,
                Parameterization::AmplitudePhase => reparameterize(&j, &Jacobian::amplitude_phase(&spec)?)?,
            };
            let p = Partition::singletons(&j);
            (j, p)
        }
        ModelSpec::GaussianMean { n, v, mu } => {
            let g = AdditiveGaussianModel::gaussian_mean(*n, *v)?;
            let j = gaussian_fim(&g, &DVector::from_element(1, *mu), true)?;
            let p = Partition::singletons(&j);
            (j, p)
        }
    };
    let partition = match &config.partition {
        None => default_partition,
        Some(map) => {
            let mut blocks = Vec::with_capacity(map.len());
            for (name, ix) in map {
                let ix: Vec<usize> = serde_json::from_value(ix.clone()).map_err(|e| {
                    CliError::Config(format!("partition block `{name}`: {e}"))
                })?;
                blocks.push((name.clone(), ix));
            }
            Partition::new(fisher.dim(), blocks)?
        }
    };
    Ok(Built { fisher, partition })
}
