//! Command-line surface of the `pwshap` binary.
//!
//! Three subcommands:
//!
//! - `explain`: fit models and a reference sampler on a CSV dataset, explain
//!   requested instance indices under a DAG, and write versioned JSON
//!   reports plus CSV summaries;
//! - `experiment {bias,mediation,adversarial}`: one-command reproduction of
//!   the synthetic studies, emitting table-shaped CSV/JSON;
//! - `oracle-check`: re-estimate every closed-form oracle entry and report
//!   pass/fail per entry.
//!
//! Exit codes: 0 on success, 1 on validation failure (invalid DAG or
//! arguments, schema mismatch, overlap violation, oracle mismatch), 2 on
//! runtime error (I/O, fitting, sampling).

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::experiment::{
    adversarial_experiment, bias_experiment, mediation_experiment, ExperimentConfig,
    ExperimentTable,
};
use crate::graph::DagSpec;
use crate::model::{fit_linear, fit_logistic, PredictiveModel, PropensityModel};
use crate::oracle::{check_entry, oracle_table, scenario};
use crate::pwshap::{OverlapPolicy, PwshapExplainer, PwshapSettings};
use crate::rng::fnv1a;
use crate::sampler::{EmpiricalKnnSampler, LinearChainImputer, ReferenceSampler};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "pwshap",
    version,
    about = "Path-wise Shapley effects of a binary treatment under a causal DAG"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Explain instances of a CSV dataset under a DAG.
    Explain(ExplainArgs),
    /// Reproduce one of the synthetic studies.
    Experiment {
        #[command(subcommand)]
        study: StudyCommand,
    },
    /// Re-estimate every closed-form oracle entry and report pass/fail.
    OracleCheck(OracleCheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelChoice {
    /// Least squares on second-order polynomial features.
    Linear,
    /// Logistic regression (binary outcomes).
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplerChoice {
    /// Exact structural equations of a built-in scenario (needs --scenario).
    Exact,
    /// Chained-regression imputer fitted on the data.
    Imputer,
    /// Empirical k-nearest-neighbour sampler.
    Knn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OverlapChoice {
    Clip,
    Strict,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    /// CSV dataset with a header row naming the DAG's variables.
    #[arg(long)]
    pub data: PathBuf,
    /// DAG as JSON: {"nodes": [...], "edges": [[from,to],...], "treatment": ..., "outcome": ...}.
    #[arg(long)]
    pub dag: PathBuf,
    #[arg(long, value_enum, default_value = "linear")]
    pub model: ModelChoice,
    #[arg(long, value_enum, default_value = "imputer")]
    pub sampler: SamplerChoice,
    /// Built-in scenario backing the exact sampler.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Comma-separated row indices to explain.
    #[arg(long, default_value = "0")]
    pub instances: String,
    #[arg(long, default_value_t = 10_000)]
    pub mc_draws: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "clip")]
    pub overlap: OverlapChoice,
    #[arg(long, default_value_t = 0.01)]
    pub clip_eps: f64,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// 25 replicates, full draw budget and held-out set.
    #[arg(long)]
    pub paper_scale: bool,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum StudyCommand {
    /// Confounding study (three treatment-assignment variants).
    Bias(StudyArgs),
    /// Mediation study (three mediator-wiring variants).
    Mediation(StudyArgs),
    /// Off- vs. on-manifold attribution under an explanation attack.
    Adversarial(StudyArgs),
}

#[derive(Debug, Args)]
pub struct OracleCheckArgs {
    #[arg(long, default_value_t = 50_000)]
    pub mc_draws: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Agreement tolerance in Monte Carlo standard errors.
    #[arg(long, default_value_t = 5.0)]
    pub tolerance: f64,
}

/// Classify an error for the process exit code: 1 for validation failures,
/// 2 for runtime errors.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::UnknownNode(_)
        | Error::InvalidDag(_)
        | Error::Schema(_)
        | Error::NonBinaryTreatment { .. }
        | Error::NearZeroWeight { .. }
        | Error::InvalidArgument(_)
        | Error::TooManyFeatures { .. }
        | Error::UnknownQuantity { .. }
        | Error::DoUnsupported => 1,
        Error::SingularDesign(_)
        | Error::ConvergenceFailure(_)
        | Error::ZeroProbabilityEvent(_)
        | Error::Io(_)
        | Error::Csv(_)
        | Error::Json(_) => 2,
    }
}

/// Run a parsed command; returns the process exit code for non-error
/// outcomes (oracle-check reports failures through the exit code, not as an
/// error).
pub fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Explain(args) => cmd_explain(args),
        Command::Experiment { study } => cmd_experiment(study),
        Command::OracleCheck(args) => cmd_oracle_check(args),
    }
}

fn write_manifest(out: &Path, command: &str, seed: u64, config_debug: &str) -> Result<()> {
    let manifest = serde_json::json!({
        "tool_version": TOOL_VERSION,
        "command": command,
        "seed": seed,
        "config_hash": format!("{:016x}", fnv1a(config_debug.as_bytes())),
    });
    fs::write(out.join("run.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

fn parse_instances(list: &str) -> Result<Vec<usize>> {
    list.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidArgument(format!("bad instance index {s:?}")))
        })
        .collect()
}

fn cmd_explain(args: &ExplainArgs) -> Result<i32> {
    let dag = DagSpec::from_json(&fs::read_to_string(&args.dag)?)?;
    let issues = dag.validate();
    if !issues.is_empty() {
        return Err(Error::InvalidDag(issues.join("; ")));
    }
    let data = Dataset::from_csv_path(&args.data, &dag)?;
    let instances = parse_instances(&args.instances)?;

    let (x, y) = data.xy()?;
    let outcome: Box<dyn PredictiveModel> = match args.model {
        ModelChoice::Linear => Box::new(fit_linear(&x, &y, 2)?),
        ModelChoice::Logistic => {
            if let Some(bad) = y.iter().find(|v| **v != 0.0 && **v != 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "logistic outcome model needs a binary outcome; found {bad}"
                )));
            }
            let mut names = data.covariate_names.clone();
            names.push(data.treatment_name.clone());
            Box::new(fit_logistic(&x, &y, &names)?)
        }
    };

    let mut propensity = fit_logistic(&data.covariates, &data.treatment, &data.covariate_names)
        .map_err(|e| {
            eprintln!("note: falling back to sampled propensities ({e})");
            e
        })
        .ok();
    if let Some(p) = propensity.as_mut() {
        p.clip_epsilon = args.clip_eps;
    }

    let sampler: Box<dyn ReferenceSampler> = match args.sampler {
        SamplerChoice::Imputer => Box::new(LinearChainImputer::fit(&data.feature_rows())?),
        SamplerChoice::Knn => Box::new(EmpiricalKnnSampler::fit(&data.feature_rows())?),
        SamplerChoice::Exact => {
            let name = args.scenario.as_deref().ok_or_else(|| {
                Error::InvalidArgument(
                    "--sampler exact needs --scenario naming a built-in scenario".into(),
                )
            })?;
            let spec = scenario(name)?;
            let mut expected = dag.covariates();
            expected.push(dag.treatment.clone());
            if spec.scenario.column_names() != expected {
                return Err(Error::Schema(format!(
                    "scenario {name} has columns {:?} but the DAG implies {expected:?}",
                    spec.scenario.column_names()
                )));
            }
            Box::new(spec.scenario)
        }
    };

    let settings = PwshapSettings {
        n_draws: args.mc_draws,
        seed: args.seed,
        clip_epsilon: args.clip_eps,
        overlap: match args.overlap {
            OverlapChoice::Clip => OverlapPolicy::Clip,
            OverlapChoice::Strict => OverlapPolicy::Strict,
        },
        ..PwshapSettings::default()
    };
    let explainer = PwshapExplainer {
        dag: &dag,
        model: outcome.as_ref(),
        sampler: sampler.as_ref(),
        propensity: propensity.as_ref().map(|p| p as &dyn PropensityModel),
    };

    fs::create_dir_all(&args.out)?;
    for &idx in &instances {
        let features = data.instance(idx)?.features();
        let report = explainer.explain(&features, &settings)?;
        fs::write(args.out.join(format!("report_{idx}.json")), report.to_json()?)?;
        fs::write(args.out.join(format!("summary_{idx}.csv")), report.summary_csv())?;
    }
    write_manifest(&args.out, "explain", args.seed, &format!("{args:?}"))?;
    println!(
        "explained {} instance(s) into {}",
        instances.len(),
        args.out.display()
    );
    Ok(0)
}

fn study_config(args: &StudyArgs) -> ExperimentConfig {
    let mut config = if args.paper_scale {
        ExperimentConfig::paper_scale(args.seed)
    } else {
        ExperimentConfig::desk(args.seed)
    };
    if let Some(r) = args.replicates {
        config.replicates = r;
    }
    if let Some(s) = args.samples {
        config.n_samples = s;
    }
    config
}

fn write_table(out: &Path, table: &ExperimentTable) -> Result<()> {
    fs::create_dir_all(out)?;
    let stem = format!("{}_table", table.experiment);
    fs::write(out.join(format!("{stem}.json")), table.to_json()?)?;
    fs::write(out.join(format!("{stem}.csv")), table.summary_csv())?;
    if !table.instances.is_empty() {
        fs::write(
            out.join(format!("{}_instances.csv", table.experiment)),
            table.instances_csv(),
        )?;
    }
    Ok(())
}

fn cmd_experiment(study: &StudyCommand) -> Result<i32> {
    let (args, table) = match study {
        StudyCommand::Bias(args) => (args, bias_experiment(&study_config(args))?),
        StudyCommand::Mediation(args) => (args, mediation_experiment(&study_config(args))?),
        StudyCommand::Adversarial(args) => (args, adversarial_experiment(&study_config(args))?),
    };
    write_table(&args.out, &table)?;
    write_manifest(&args.out, &table.experiment, args.seed, &format!("{:?}", table.config))?;
    print!("{}", table.summary_csv());
    Ok(0)
}

fn cmd_oracle_check(args: &OracleCheckArgs) -> Result<i32> {
    let mut failures = 0usize;
    let entries = oracle_table();
    for entry in &entries {
        let check = check_entry(entry, args.mc_draws, args.seed, args.tolerance)?;
        println!(
            "{} {:>22}/{:<14} oracle={:>9.5} est={:>9.5} se={:.2e} z={:.2}",
            if check.pass { "PASS" } else { "FAIL" },
            check.scenario,
            check.quantity,
            check.oracle,
            check.estimate,
            check.se,
            check.z
        );
        if !check.pass {
            failures += 1;
        }
    }
    println!(
        "{} of {} oracle entries passed at {} SE ({} draws, seed {})",
        entries.len() - failures,
        entries.len(),
        args.tolerance,
        args.mc_draws,
        args.seed
    );
    Ok(if failures == 0 { 0 } else { 1 })
}
