//! Command runners. Each turns parsed arguments plus the loaded config into
//! a [`Report`].

use crb_core::models::{lmm_fisher, lmm_log_inflation};
use crb_core::numeric::{
    fd_hessian_fim, gaussian_fim, mc_score_fim, AdditiveGaussianModel, LogLikelihoodModel, DEFAULT_STEP,
};
use crb_core::validate::{
    compare, run_lmm_experiment, run_sine_experiment, EmpiricalMse, LmmMode, SineMode, Verdict, LINEAR_SLACK,
    SINE_SLACK,
};
use crb_core::{
    bayes_factor, chain_decompose, crb_conditional, crb_joint, crb_marginal, independence_check, CrbValue,
    FisherMatrix, Partition,
};
use nalgebra::DVector;

use crate::args::{Command, Common, Estimator};
use crate::config::{self, AnalysisConfig, Built, ModelSpec, OutputFormat, Request};
use crate::report::{Quantity, Report};
use crate::CliError;

pub const DEFAULT_FIM_TRIALS: usize = 10_000;
pub const DEFAULT_LMM_TRIALS: usize = 10_000;
pub const DEFAULT_SINE_TRIALS: usize = 1_000;
pub const HESSIAN_STEP: f64 = 1e-4;

#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub format: OutputFormat,
    /// Set when a Monte Carlo verdict came out `violates`.
    pub violates: bool,
}

fn load(common: &Common) -> Result<AnalysisConfig, CliError> {
    let given = [&common.matrix, &common.model, &common.config];
    match given.iter().filter(|p| p.is_some()).count() {
        0 => return Err(CliError::Config("one of --matrix, --model or --config is required".into())),
        1 => {}
        _ => return Err(CliError::Config("give exactly one of --matrix, --model and --config".into())),
    }
    if let Some(p) = &common.matrix {
        config::load_matrix(p)
    } else {
        config::load_config(common.model.as_ref().or(common.config.as_ref()).expect("checked above"))
    }
}

pub fn execute(cmd: &Command) -> Result<Outcome, CliError> {
    let common = cmd.common();
    let cfg = load(common)?;
    let format = common.output.or(cfg.output).unwrap_or_default();
    let seed = common.seed.or(cfg.seed).unwrap_or(0);
    let trials = common.trials.or(cfg.trials);
    let mut report = Report::new(cmd.name(), cfg.model.describe());
    let mut violates = false;

    match cmd {
        Command::Lmm { inflation, .. } => lmm(&cfg, *inflation, &mut report)?,
        Command::Sine { .. } => sine(&cfg, &mut report)?,
        Command::Fim { estimator, step, .. } => fim(&cfg, *estimator, *step, trials, seed, &mut report)?,
        Command::Validate { slack, .. } => {
            let slack = slack.or_else(|| {
                cfg.requests.iter().find_map(|r| match r {
                    Request::McExperiment { slack } => *slack,
                    _ => None,
                })
            });
            violates = validate(&cfg, slack, trials, seed, &mut report)?;
        }
        _ => {
            let built = config::build(&cfg)?;
            for req in requests(cmd, &cfg, &built.partition)? {
                for q in evaluate(&req, &built)? {
                    report.push(q);
                }
            }
        }
    }
    Ok(Outcome {
        report,
        format,
        violates,
    })
}

/// Requests for a decomposition subcommand: flags first, then matching
/// config requests, then the subcommand default.
fn requests(cmd: &Command, cfg: &AnalysisConfig, p: &Partition) -> Result<Vec<Request>, CliError> {
    let all: Vec<String> = p.names().map(String::from).collect();
    let from_config = |kind: fn(&Request) -> bool| -> Vec<Request> {
        cfg.requests.iter().filter(|r| kind(r)).cloned().collect()
    };
    let pair = |interest: &Option<String>, other: &Option<String>| match (interest, other) {
        (Some(a), Some(b)) => Ok(Some((a.clone(), b.clone()))),
        (None, None) => Ok(None),
        _ => Err(CliError::Config("--interest and --other go together".into())),
    };
    let need = |v: Vec<Request>, what: &str| {
        if v.is_empty() {
            Err(CliError::Config(format!("{what} (on the command line or as config requests)")))
        } else {
            Ok(v)
        }
    };
    Ok(match cmd {
        Command::Joint { blocks, .. } if !blocks.is_empty() => vec![Request::Joint { blocks: blocks.clone() }],
        Command::Joint { .. } => {
            let v = from_config(|r| matches!(r, Request::Joint { .. }));
            if v.is_empty() {
                vec![Request::Joint { blocks: all }]
            } else {
                v
            }
        }
        Command::Marginal { interest: Some(i), .. } => vec![Request::Marginal { interest: i.clone() }],
        Command::Marginal { .. } => {
            let v = from_config(|r| matches!(r, Request::Marginal { .. }));
            if v.is_empty() {
                all.into_iter().map(|interest| Request::Marginal { interest }).collect()
            } else {
                v
            }
        }
        Command::Conditional { interest: Some(i), known, .. } => vec![Request::Conditional {
            interest: i.clone(),
            known: known.clone(),
        }],
        Command::Conditional { known, .. } if !known.is_empty() => {
            return Err(CliError::Config("--known needs --interest".into()))
        }
        Command::Conditional { .. } => need(
            from_config(|r| matches!(r, Request::Conditional { .. })),
            "conditional needs --interest",
        )?,
        Command::Chain { order, .. } if !order.is_empty() => vec![Request::Chain { order: order.clone() }],
        Command::Chain { .. } => {
            let v = from_config(|r| matches!(r, Request::Chain { .. }));
            if v.is_empty() {
                vec![Request::Chain { order: all }]
            } else {
                v
            }
        }
        Command::Bayes { interest, other, .. } => match pair(interest, other)? {
            Some((interest, other)) => vec![Request::Bayes { interest, other }],
            None => need(
                from_config(|r| matches!(r, Request::Bayes { .. })),
                "bayes needs --interest and --other",
            )?,
        },
        Command::Independence { interest, other, tol, .. } => match pair(interest, other)? {
            Some((interest, other)) => vec![Request::Independence { interest, other, tol: *tol }],
            None => need(
                from_config(|r| matches!(r, Request::Independence { .. })),
                "independence needs --interest and --other",
            )?,
        },
        Command::Lmm { .. } | Command::Sine { .. } | Command::Fim { .. } | Command::Validate { .. } => {
            unreachable!("model subcommands do not take block requests")
        }
    })
}

pub fn evaluate(req: &Request, built: &Built) -> Result<Vec<Quantity>, CliError> {
    let (j, p) = (&built.fisher, &built.partition);
    Ok(match req {
        Request::Joint { blocks } => vec![Quantity::crb(&crb_joint(j, p, blocks)?)],
        Request::Marginal { interest } => vec![Quantity::crb(&crb_marginal(j, p, interest)?)],
        Request::Conditional { interest, known } => vec![Quantity::crb(&crb_conditional(j, p, interest, known)?)],
        Request::Chain { order } => {
            let mut out: Vec<Quantity> = chain_decompose(j, p, order)?
                .iter()
                .map(|f| Quantity::crb(&f.crb))
                .collect();
            out.push(Quantity::crb(&crb_joint(j, p, order)?));
            out
        }
        Request::Bayes { interest, other } => bayes(j, p, interest, other)?,
        Request::Independence { interest, other, tol } => {
            let independent = independence_check(j, p, interest, other, *tol)?;
            vec![
                Quantity::text(format!("independent({interest},{other})"), independent.to_string()),
                Quantity::number(format!("coupling({interest},{other})"), coupling(j, p, interest, other)?),
            ]
        }
        Request::McExperiment { .. } => Vec::new(),
    })
}

fn bayes(j: &FisherMatrix, p: &Partition, interest: &str, other: &str) -> Result<Vec<Quantity>, CliError> {
    let b = bayes_factor(j, p, interest, other)?;
    Ok(vec![
        Quantity::crb(&b.lhs),
        Quantity::crb(&crb_conditional(j, p, interest, &[other])?),
        Quantity::crb(&crb_marginal(j, p, other)?),
        Quantity::crb(&crb_conditional(j, p, other, &[interest])?),
        Quantity::from_log(format!("factor({interest};{other})"), b.log_factor),
    ])
}

/// Largest `|J_ij| / sqrt(J_ii J_jj)` across the two blocks.
fn coupling(j: &FisherMatrix, p: &Partition, a: &str, b: &str) -> Result<f64, CliError> {
    let m = j.entries();
    let (ia, ib) = (p.indices(a)?, p.indices(b)?);
    Ok(ia
        .iter()
        .flat_map(|&r| ib.iter().map(move |&c| m[(r, c)].abs() / (m[(r, r)] * m[(c, c)]).sqrt()))
        .fold(0.0, f64::max))
}

fn wrong_model(cmd: &str, wants: &str, cfg: &AnalysisConfig) -> CliError {
    CliError::Config(format!("`{cmd}` needs {wants} model, got {}", cfg.model.describe()))
}

fn lmm(cfg: &AnalysisConfig, inflation_only: bool, report: &mut Report) -> Result<(), CliError> {
    let (spec, _, _) = config::lmm_spec(&cfg.model)?.ok_or_else(|| wrong_model("lmm", "an lmm", cfg))?;
    let log_inflation = lmm_log_inflation(&spec)?;
    if !inflation_only {
        let (j, p) = lmm_fisher(&spec)?;
        report.push(Quantity::crb(&crb_marginal(&j, &p, "x")?));
        report.push(Quantity::crb(&crb_conditional(&j, &p, "x", &["z"])?));
        report.push(Quantity::crb(&crb_marginal(&j, &p, "z")?));
        report.push(Quantity::crb(&crb_joint(&j, &p, &["x", "z", "v"])?));
    }
    report.push(Quantity::from_log("factor(x;z)", log_inflation));
    Ok(())
}

fn sine(cfg: &AnalysisConfig, report: &mut Report) -> Result<(), CliError> {
    if !matches!(cfg.model, ModelSpec::Sine { .. }) {
        return Err(wrong_model("sine", "a sine", cfg));
    }
    let built = config::build(cfg)?;
    let (j, p) = (&built.fisher, &built.partition);
    report.push(Quantity::crb(&crb_marginal(j, p, "omega")?));
    for label in j.labels().iter().filter(|l| *l != "omega" && *l != "v") {
        let b = bayes_factor(j, p, label, "omega")?;
        report.push(Quantity::crb(&b.lhs));
        report.push(Quantity::crb(&crb_conditional(j, p, label, &["omega"])?));
        report.push(Quantity::from_log(format!("factor({label};omega)"), b.log_factor));
    }
    Ok(())
}

/// Gaussian model and true parameter vector (without the noise variance).
fn generative(cfg: &AnalysisConfig, cmd: &str) -> Result<(AdditiveGaussianModel, DVector<f64>), CliError> {
    if let Some((spec, x, z)) = config::lmm_spec(&cfg.model)? {
        let theta = DVector::from_iterator(x.len() + z.len(), x.iter().chain(z.iter()).copied());
        return Ok((AdditiveGaussianModel::lmm(&spec)?, theta));
    }
    if let Some(spec) = config::sine_spec(&cfg.model)? {
        let theta = DVector::from_row_slice(&spec.signal_params());
        return Ok((AdditiveGaussianModel::sine(spec.n(), spec.v())?, theta));
    }
    if let ModelSpec::GaussianMean { n, v, mu } = cfg.model {
        return Ok((AdditiveGaussianModel::gaussian_mean(n, v)?, DVector::from_element(1, mu)));
    }
    Err(wrong_model(cmd, "an lmm, sine or gaussian_mean", cfg))
}

fn fim(
    cfg: &AnalysisConfig,
    estimator: Estimator,
    step: Option<f64>,
    trials: Option<usize>,
    seed: u64,
    report: &mut Report,
) -> Result<(), CliError> {
    let (model, theta) = generative(cfg, "fim")?;
    let exact = gaussian_fim(&model, &theta, true)?;
    let labels = exact.labels().to_vec();
    let upper = |f: &dyn Fn(usize, usize) -> Quantity| -> Vec<Quantity> {
        (0..labels.len())
            .flat_map(|r| (r..labels.len()).map(move |c| (r, c)))
            .map(|(r, c)| f(r, c))
            .collect()
    };
    let name = |r: usize, c: usize| format!("J[{},{}]", labels[r], labels[c]);
    match estimator {
        Estimator::Exact => {
            let m = exact.entries();
            report.quantities.extend(upper(&|r, c| Quantity::number(name(r, c), m[(r, c)])));
            report.push(Quantity::number("logdet(J)", exact.log_det()));
        }
        Estimator::Score | Estimator::Hessian => {
            let trials = trials.unwrap_or(DEFAULT_FIM_TRIALS);
            let ll = LogLikelihoodModel::from_gaussian(&model, true);
            let full = DVector::from_iterator(theta.len() + 1, theta.iter().copied().chain([model.v()]));
            let est = if estimator == Estimator::Score {
                mc_score_fim(&ll, &full, trials, seed, step.unwrap_or(DEFAULT_STEP))?
            } else {
                fd_hessian_fim(&ll, &full, trials, seed, step.unwrap_or(HESSIAN_STEP))?
            };
            let m = est.fisher.entries();
            let se = &est.std_error;
            report
                .quantities
                .extend(upper(&|r, c| Quantity::number(name(r, c), m[(r, c)]).with_std_error(se[(r, c)])));
            report.push(Quantity::number("logdet(J)", est.fisher.log_det()));
            report.push(Quantity::number("max_z", est.max_z(exact.entries())));
            report.seed = Some(seed);
            report.trials = Some(trials);
        }
    }
    Ok(())
}

fn verdict_rows(
    report: &mut Report,
    tag: &str,
    mse: &EmpiricalMse,
    bound: &CrbValue,
    slack: f64,
) -> Result<bool, CliError> {
    let v = compare(mse, bound, slack)?;
    report.push(Quantity::from_log(format!("gen_var({tag})"), mse.log_gen_variance));
    report.push(Quantity::crb(bound));
    report.push(Quantity::text(format!("verdict({tag})"), v.to_string()));
    Ok(v == Verdict::Violates)
}

/// Runs the model's Monte Carlo experiments. Returns true if any verdict is `violates`.
fn validate(
    cfg: &AnalysisConfig,
    slack: Option<f64>,
    trials: Option<usize>,
    seed: u64,
    report: &mut Report,
) -> Result<bool, CliError> {
    report.seed = Some(seed);
    let mut violates = false;
    if let Some((spec, x, z)) = config::lmm_spec(&cfg.model)? {
        let trials = trials.unwrap_or(DEFAULT_LMM_TRIALS);
        let slack = slack.unwrap_or(LINEAR_SLACK);
        report.trials = Some(trials);
        let joint = run_lmm_experiment(&spec, &x, &z, trials, seed, LmmMode::Joint)?;
        let known = run_lmm_experiment(&spec, &x, &z, trials, seed, LmmMode::ZKnown)?;
        let x_labels: Vec<&String> = joint.labels.iter().filter(|l| l.starts_with("x_")).collect();
        let joint_x = joint.select(&x_labels)?;
        let (j, p) = lmm_fisher(&spec)?;
        violates |= verdict_rows(report, "x", &joint_x, &crb_marginal(&j, &p, "x")?, slack)?;
        violates |= verdict_rows(report, "x|z,v", &known, &crb_conditional(&j, &p, "x", &["z", "v"])?, slack)?;
        report.push(Quantity::from_log(
            "mse_factor(x;z)",
            joint_x.log_gen_variance - known.log_gen_variance,
        ));
        report.push(Quantity::from_log("factor(x;z)", lmm_log_inflation(&spec)?));
        return Ok(violates);
    }
    let Some(spec) = config::sine_spec(&cfg.model)? else {
        return Err(wrong_model("validate", "an lmm or sine", cfg));
    };
    let trials = trials.unwrap_or(DEFAULT_SINE_TRIALS);
    let slack = slack.unwrap_or(SINE_SLACK);
    report.trials = Some(trials);
    let known = run_sine_experiment(&spec, trials, seed, SineMode::OmegaKnown)?;
    let unknown = run_sine_experiment(&spec, trials, seed, SineMode::OmegaUnknown)?;

    let model = AdditiveGaussianModel::sine(spec.n(), spec.v())?;
    let exact = gaussian_fim(&model, &DVector::from_row_slice(&spec.signal_params()), true)?;
    let grouped = |signal: Vec<usize>, rest: Vec<(&str, Vec<usize>)>| {
        let mut blocks = vec![("signal", signal)];
        blocks.extend(rest);
        Partition::new(5, blocks)
    };
    let rename = |mut c: CrbValue, interest: &[&str], known: &[&str]| {
        c.interest = interest.iter().map(|s| s.to_string()).collect();
        c.known = known.iter().map(|s| s.to_string()).collect();
        c
    };
    let pk = grouped(vec![0, 1, 2], vec![("omega", vec![3]), ("v", vec![4])])?;
    let bound_known = rename(
        crb_conditional(&exact, &pk, "signal", &["omega", "v"])?,
        &["A", "B", "C"],
        &["omega", "v"],
    );
    violates |= verdict_rows(report, "A,B,C|omega", &known, &bound_known, slack)?;
    let pu = grouped(vec![0, 1, 2, 3], vec![("v", vec![4])])?;
    let bound_unknown = rename(crb_marginal(&exact, &pu, "signal")?, &["A", "B", "C", "omega"], &[]);
    violates |= verdict_rows(report, "A,B,C,omega", &unknown, &bound_unknown, slack)?;

    let singles = Partition::singletons(&exact);
    for label in ["A", "B", "C"] {
        let ratio = unknown.mse(label).expect("fitted") / known.mse(label).expect("fitted");
        report.push(Quantity::from_log(format!("mse_factor({label};omega)"), ratio.ln()));
        report.push(Quantity::from_log(
            format!("factor({label};omega)"),
            bayes_factor(&exact, &singles, label, "omega")?.log_factor,
        ));
    }
    report.push(Quantity::number("discarded", unknown.discarded as f64));
    Ok(violates)
}
