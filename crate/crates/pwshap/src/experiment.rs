//! Reproducible synthetic studies.
//!
//! Three protocols, each run over independent replicates with derived seeds:
//!
//! - **bias**: two covariates, three treatment-assignment variants
//!   (randomized, one confounder, two confounders); reports how large each
//!   covariate's path-wise effect is relative to the outcome scale.
//! - **mediation**: a binary and a uniform covariate, three variants in
//!   which neither, one, or both are mediators.
//! - **adversarial**: fair / unfair / attacker models on data where the
//!   sensitive attribute is almost deterministically mirrored by a proxy;
//!   compares off-manifold and on-manifold Shapley attribution to T.
//!
//! Every replicate draws a fresh dataset, splits it in half, fits the outcome
//! model (linear regression on second-order polynomial features), the
//! propensity (logistic regression) and the reference sampler (chained-
//! regression imputer) on the training half, and evaluates on the test half.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{fit_linear, fit_logistic, PropensityModel};
use crate::oracle::{generate_dataset, scenario, AdversarialModel, ScenarioSpec};
use crate::pwshap::{PwshapExplainer, PwshapSettings};
use crate::rng::{derive_seed, fnv1a};
use crate::sampler::LinearChainImputer;
use crate::shapley::{full_shapley, ReferenceMode, ShapleyConfig};

/// Replication budget for one study.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub replicates: usize,
    /// Dataset size per replicate; half is used for fitting, half held out.
    pub n_samples: usize,
    /// Monte Carlo draws per value-function evaluation.
    pub n_draws: usize,
    /// At most this many held-out instances are explained per replicate.
    pub max_test_instances: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Quick desk-scale run: 10 replicates, reduced draw budget. The
    /// qualitative patterns (orderings, dominance ratios) hold at this scale.
    pub fn desk(seed: u64) -> Self {
        ExperimentConfig {
            replicates: 10,
            n_samples: 200,
            n_draws: 500,
            max_test_instances: 50,
            seed,
        }
    }

    /// Full-scale run: 25 replicates, the whole held-out half, and the full
    /// per-evaluation draw budget.
    pub fn paper_scale(seed: u64) -> Self {
        ExperimentConfig {
            replicates: 25,
            n_samples: 200,
            n_draws: 5_000,
            max_test_instances: 100,
            seed,
        }
    }

    /// Stable fingerprint of the configuration, for tagging outputs.
    pub fn hash(&self) -> String {
        format!("{:016x}", fnv1a(format!("{self:?}").as_bytes()))
    }
}

/// One cell of a study table: a scalar aggregated across replicates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentRow {
    /// Data-generating variant (bias/mediation) or model (adversarial).
    pub variant: String,
    /// Path label (bias/mediation) or attribution method (adversarial).
    pub path: String,
    /// Mean across replicates.
    pub value: f64,
    /// Standard error across replicates.
    pub se: f64,
    pub n_replicates: usize,
}

/// One per-instance attribution, kept for boxplot-style downstream plots
/// (adversarial study only).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceAttribution {
    pub variant: String,
    pub method: String,
    pub replicate: usize,
    pub instance: usize,
    pub phi_t: f64,
}

/// Aggregated output of one study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentTable {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub rows: Vec<ExperimentRow>,
    /// Raw per-instance attributions; empty except for the adversarial study.
    #[serde(default)]
    pub instances: Vec<InstanceAttribution>,
}

impl ExperimentTable {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("experiment,variant,path,value,se,n_replicates\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.experiment, r.variant, r.path, r.value, r.se, r.n_replicates
            ));
        }
        out
    }

    /// Look up one cell.
    pub fn cell(&self, variant: &str, path: &str) -> Option<&ExperimentRow> {
        self.rows
            .iter()
            .find(|r| r.variant == variant && r.path == path)
    }

    /// Per-instance attributions as CSV (adversarial study).
    pub fn instances_csv(&self) -> String {
        let mut out = String::from("variant,method,replicate,instance,phi_t\n");
        for i in &self.instances {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                i.variant, i.method, i.replicate, i.instance, i.phi_t
            ));
        }
        out
    }
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, (var / n).sqrt())
}

/// One replicate of a path-effect study: fit everything on the training
/// half, average each path's effect over held-out instances, and normalize
/// by the training-outcome standard deviation.
fn path_scores_replicate(
    spec: &ScenarioSpec,
    config: &ExperimentConfig,
    replicate: usize,
) -> Result<Vec<(String, f64)>> {
    let seed_r = derive_seed(config.seed, &format!("{}/rep{replicate}", spec.name));
    let dataset = generate_dataset(spec, config.n_samples, seed_r)?;
    let (train, test) = dataset.split(0.5);

    let (x, y) = train.xy()?;
    let outcome = fit_linear(&x, &y, 2)?;
    let (y_mean, _) = mean_se(&y);
    let sigma_y = (y.iter().map(|v| (v - y_mean) * (v - y_mean)).sum::<f64>()
        / (y.len() as f64 - 1.0))
        .sqrt();

    // Logistic propensity; on failure (e.g. separation in a small sample)
    // fall back to sampler-estimated arm probabilities.
    let prop = fit_logistic(&train.covariates, &train.treatment, &train.covariate_names).ok();
    let imputer = LinearChainImputer::fit(&train.feature_rows())?;
    let explainer = PwshapExplainer {
        dag: &spec.dag,
        model: &outcome,
        sampler: &imputer,
        propensity: prop.as_ref().map(|p| p as &dyn PropensityModel),
    };
    let settings = PwshapSettings {
        n_draws: config.n_draws,
        seed: derive_seed(seed_r, "explain"),
        ..PwshapSettings::default()
    };

    let rows = test.feature_rows();
    let rows = &rows[..rows.len().min(config.max_test_instances)];
    let mut sums: Vec<(String, f64)> = Vec::new();
    for features in rows {
        let report = explainer.explain(features, &settings)?;
        for p in &report.paths {
            if p.path == "direct" {
                continue;
            }
            match sums.iter_mut().find(|(name, _)| *name == p.path) {
                Some((_, s)) => *s += p.delta.mean,
                None => sums.push((p.path.clone(), p.delta.mean)),
            }
        }
    }
    Ok(sums
        .into_iter()
        .map(|(name, s)| (name, (s / rows.len() as f64).abs() / sigma_y))
        .collect())
}

/// Run a path-effect study over the given data-generating variants.
fn path_effect_study(
    experiment: &str,
    variants: &[&str],
    config: &ExperimentConfig,
) -> Result<ExperimentTable> {
    let mut rows = Vec::new();
    for name in variants {
        let spec = scenario(name)?;
        let per_rep: Vec<Vec<(String, f64)>> = (0..config.replicates)
            .into_par_iter()
            .map(|r| path_scores_replicate(&spec, config, r))
            .collect::<Result<_>>()?;
        // Stable path order from the first replicate.
        for (path, _) in &per_rep[0] {
            let values: Vec<f64> = per_rep
                .iter()
                .map(|rep| {
                    rep.iter()
                        .find(|(p, _)| p == path)
                        .map(|(_, v)| *v)
                        .unwrap_or(0.0)
                })
                .collect();
            let (value, se) = mean_se(&values);
            rows.push(ExperimentRow {
                variant: name.to_string(),
                path: path.clone(),
                value,
                se,
                n_replicates: config.replicates,
            });
        }
    }
    Ok(ExperimentTable {
        experiment: experiment.to_string(),
        config: *config,
        config_hash: config.hash(),
        rows,
        instances: Vec::new(),
    })
}

/// Confounding study: |mean path effect| / sigma_Y for C1 and C2 under
/// randomized, single-confounder and double-confounder assignment.
pub fn bias_experiment(config: &ExperimentConfig) -> Result<ExperimentTable> {
    path_effect_study(
        "bias",
        &["bias_table1_i", "bias_table1_ii", "bias_table1_iii"],
        config,
    )
}

/// Mediation study: |mean path effect| / sigma_Y for D and Q when neither,
/// one, or both are mediators.
pub fn mediation_experiment(config: &ExperimentConfig) -> Result<ExperimentTable> {
    path_effect_study(
        "mediation",
        &[
            "mediation_table2_i",
            "mediation_table2_ii",
            "mediation_table2_iii",
        ],
        config,
    )
}

/// Adversarial study: mean |phi_T| per model under off- and on-manifold
/// attribution. The attacker behaves unfairly only on the manifold, so
/// off-manifold probes report it as fair while on-manifold attribution does
/// not.
pub fn adversarial_experiment(config: &ExperimentConfig) -> Result<ExperimentTable> {
    let spec = scenario("adversarial")?;
    let models = [
        ("fair", AdversarialModel::Fair),
        ("unfair", AdversarialModel::Unfair),
        ("attacker", AdversarialModel::Attacker),
    ];
    let modes = [
        ("off_manifold", ReferenceMode::OffManifold),
        ("on_manifold", ReferenceMode::OnManifold),
    ];
    let feature_names: Vec<String> = vec!["D".into(), "Q".into(), "T".into()];
    let t_col = 2;

    // per_rep[r] = (means[model][mode], per-instance attributions), where
    // means are |phi_T| averaged over held-out instances.
    type RepOut = (Vec<Vec<f64>>, Vec<InstanceAttribution>);
    let per_rep: Vec<RepOut> = (0..config.replicates)
        .into_par_iter()
        .map(|r| -> Result<RepOut> {
            let seed_r = derive_seed(config.seed, &format!("adversarial/rep{r}"));
            let dataset = generate_dataset(&spec, config.n_samples, seed_r)?;
            let (train, test) = dataset.split(0.5);
            let imputer = LinearChainImputer::fit(&train.feature_rows())?;
            let rows = test.feature_rows();
            let rows = &rows[..rows.len().min(config.max_test_instances)];
            let mut out = vec![vec![0.0; modes.len()]; models.len()];
            let mut attributions = Vec::new();
            for (mi, (model_name, model)) in models.iter().enumerate() {
                for (ki, (mode_name, mode)) in modes.iter().enumerate() {
                    let shap_config = ShapleyConfig {
                        mode: *mode,
                        n_draws: config.n_draws,
                        seed: derive_seed(seed_r, &format!("shap/{mi}/{ki}")),
                    };
                    let mut total = 0.0;
                    for (ii, features) in rows.iter().enumerate() {
                        let report =
                            full_shapley(model, &imputer, features, &feature_names, &shap_config)?;
                        let phi_t = report.phi[t_col].mean;
                        total += phi_t.abs();
                        attributions.push(InstanceAttribution {
                            variant: model_name.to_string(),
                            method: mode_name.to_string(),
                            replicate: r,
                            instance: ii,
                            phi_t,
                        });
                    }
                    out[mi][ki] = total / rows.len() as f64;
                }
            }
            Ok((out, attributions))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (mi, (model_name, _)) in models.iter().enumerate() {
        for (ki, (mode_name, _)) in modes.iter().enumerate() {
            let values: Vec<f64> = per_rep.iter().map(|r| r.0[mi][ki]).collect();
            let (value, se) = mean_se(&values);
            rows.push(ExperimentRow {
                variant: model_name.to_string(),
                path: mode_name.to_string(),
                value,
                se,
                n_replicates: config.replicates,
            });
        }
    }
    Ok(ExperimentTable {
        experiment: "adversarial".to_string(),
        config: *config,
        config_hash: config.hash(),
        rows,
        instances: per_rep.into_iter().flat_map(|r| r.1).collect(),
    })
}
