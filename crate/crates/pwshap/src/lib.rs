//! Path-wise Shapley effects (PWSHAP) for explaining the local effect of a
//! binary treatment variable in a black-box model under a user-supplied DAG.
//!
//! The crate decomposes on-manifold Shapley values of a treatment into
//! propensity-weighted coalition effects and differences those effects along
//! causal pathways, yielding local confounding / moderating / mediating
//! attributions. It ships:
//!
//! - [`graph`]: DAG validation, d-separation, treatment-to-outcome path
//!   enumeration with causal role labels;
//! - [`model`]: the pluggable black-box contract plus built-in linear
//!   (with interactions / polynomial features) and logistic (IRLS) models;
//! - [`sampler`]: conditional reference distributions through three backends
//!   (exact generative scenarios, a chained-regression imputer, empirical kNN);
//! - [`shapley`]: value functions, coalition-wise Shapley values, exact-
//!   enumeration attributions and the Causal Shapley direct/indirect split;
//! - [`pwshap`]: propensity weights, coalition and path-wise Shapley effects,
//!   the three-step estimation procedure and error-bound harnesses;
//! - [`scenario`] / [`oracle`]: executable structural equations for the
//!   synthetic building-block DAGs together with closed-form ground truth;
//! - [`experiment`] / [`cli`]: one-command reproduction of the synthetic
//!   bias, mediation and adversarial-robustness studies.
//!
//! See the `examples/` directory for one runnable program per capability and
//! the `pwshap` binary for the command-line surface.

pub mod cli;
pub mod data;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod model;
pub mod oracle;
pub mod pwshap;
pub mod rng;
pub mod sampler;
pub mod scenario;
pub mod shapley;

pub use data::{Dataset, Instance};
pub use error::{Error, Result};
pub use experiment::{
    adversarial_experiment, bias_experiment, mediation_experiment, ExperimentConfig,
    ExperimentRow, ExperimentTable,
};
pub use graph::{CausalPath, DagSpec, PathRole};
pub use model::{
    clip_propensity, fit_linear, fit_logistic, LinearInteractionModel, LogisticModel,
    PredictiveModel, PropensityModel,
};
pub use oracle::{
    check_entry, generate_dataset, oracle_table, oracle_value, scenario as oracle_scenario,
    AdversarialModel, OracleCheck, OracleEntry, ScenarioSpec,
};
pub use pwshap::{
    CoalitionEffect, OverlapPolicy, PathEffect, PathVariant, PropensityWeight, PwshapReport,
    PwshapSettings,
};
pub use sampler::{EmpiricalKnnSampler, LinearChainImputer, ReferenceSampler, SampleBatch};
pub use scenario::GenerativeScenario;
pub use shapley::{Coalition, ReferenceMode, ShapleyReport, ValueEstimate};
