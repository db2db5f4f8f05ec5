//! Synthetic building-block scenarios with closed-form ground truth.
//!
//! Each scenario bundles a DAG, an executable structural model over the
//! sampler columns, the outcome model, and the exact propensity. The oracle
//! table lists closed-form values of coalition effects, path-wise effects,
//! propensity weights and Causal Shapley splits at pinned instances; the
//! check harness re-estimates each entry by Monte Carlo so that any drift in
//! the estimators is caught against independently derived formulas.

use std::sync::Arc;

use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::DagSpec;
use crate::model::{LinearInteractionModel, PredictiveModel};
use crate::pwshap::{PathVariant, PwshapExplainer, PwshapSettings};
use crate::rng::{derive_seed, rng_from_seed, standard_normal};
use crate::scenario::{GenerativeScenario, ScenarioNode};
use crate::shapley::{causal_shapley_split, Coalition, ReferenceMode, ShapleyConfig, ValueEstimate};

type PropensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A synthetic study: graph, data law, outcome model, exact propensity.
pub struct ScenarioSpec {
    pub name: String,
    pub dag: DagSpec,
    /// Structural model over the sampler columns (covariates then T).
    pub scenario: GenerativeScenario,
    pub model: LinearInteractionModel,
    /// Exact p(T = 1 | all covariates), when available in closed form.
    pub propensity: Option<PropensityFn>,
    /// Additive Gaussian outcome noise used when generating datasets.
    pub noise_sd: f64,
}

pub const SCENARIO_NAMES: &[&str] = &[
    "moderation",
    "bias",
    "mediation",
    "mixed",
    "dependent_mediators",
    "adversarial",
    "bias_table1_i",
    "bias_table1_ii",
    "bias_table1_iii",
    "mediation_table2_i",
    "mediation_table2_ii",
    "mediation_table2_iii",
];

// Default parameters: every coefficient 1 except the two moderation
// interactions, which are 2 and 4 so the two covariates are distinguishable.
const A1: f64 = 2.0;
const A2: f64 = 4.0;

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn edges(v: &[(&str, &str)]) -> Vec<(String, String)> {
    v.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

fn c1c2_dag(extra: &[(&str, &str)]) -> DagSpec {
    let mut e = vec![("C1", "Y"), ("C2", "Y"), ("T", "Y")];
    e.extend_from_slice(extra);
    DagSpec::new(names(&["T", "C1", "C2", "Y"]), edges(&e), "T", "Y")
}

fn dq_dag(extra: &[(&str, &str)]) -> DagSpec {
    let mut e = vec![("D", "Y"), ("Q", "Y"), ("T", "Y")];
    e.extend_from_slice(extra);
    DagSpec::new(names(&["T", "D", "Q", "Y"]), edges(&e), "T", "Y")
}

/// Moderation / bias outcome: f = t + c1 + c2 + 2 t c1 + 4 t c2.
fn c1c2_model() -> LinearInteractionModel {
    LinearInteractionModel::new(0.0, 1.0, vec![1.0, 1.0], vec![A1, A2])
}

/// Mediation outcome: f = t + d + q + t d + t q. Columns [D, Q].
fn dq_model() -> LinearInteractionModel {
    LinearInteractionModel::new(0.0, 1.0, vec![1.0, 1.0], vec![1.0, 1.0])
}

/// Unit-coefficient variant of the confounding outcome, used by the study
/// tables (the reported magnitudes assume all coefficients equal 1).
fn c1c2_unit_model() -> LinearInteractionModel {
    LinearInteractionModel::new(0.0, 1.0, vec![1.0, 1.0], vec![1.0, 1.0])
}

/// Look up a scenario by name.
pub fn scenario(name: &str) -> Result<ScenarioSpec> {
    let unknown = || Error::UnknownQuantity {
        scenario: name.to_string(),
        quantity: "<scenario>".to_string(),
        available: SCENARIO_NAMES.iter().map(|s| s.to_string()).collect(),
    };
    let spec = match name {
        // Randomized treatment, two outcome-only covariates.
        "moderation" | "bias_table1_i" => ScenarioSpec {
            name: name.to_string(),
            dag: c1c2_dag(&[]),
            scenario: GenerativeScenario::new(vec![
                ScenarioNode::uniform("C1"),
                ScenarioNode::uniform("C2"),
                ScenarioNode::bernoulli("T", vec![], |_| 0.5),
            ])?,
            model: if name == "moderation" {
                c1c2_model()
            } else {
                c1c2_unit_model()
            },
            propensity: Some(Arc::new(|_| 0.5)),
            noise_sd: 0.1,
        },
        // One confounder: p(T=1 | c1, c2) = c1.
        "bias" | "bias_table1_ii" => ScenarioSpec {
            name: name.to_string(),
            dag: c1c2_dag(&[("C1", "T")]),
            scenario: GenerativeScenario::new(vec![
                ScenarioNode::uniform("C1"),
                ScenarioNode::uniform("C2"),
                ScenarioNode::bernoulli("T", vec![0], |p| p[0]),
            ])?,
            model: if name == "bias" {
                c1c2_model()
            } else {
                c1c2_unit_model()
            },
            propensity: Some(Arc::new(|c: &[f64]| c[0])),
            noise_sd: 0.1,
        },
        // Two confounders: p(T=1 | c1, c2) = c1 c2.
        "bias_table1_iii" => ScenarioSpec {
            name: name.to_string(),
            dag: c1c2_dag(&[("C1", "T"), ("C2", "T")]),
            scenario: GenerativeScenario::new(vec![
                ScenarioNode::uniform("C1"),
                ScenarioNode::uniform("C2"),
                ScenarioNode::bernoulli("T", vec![0, 1], |p| p[0] * p[1]),
            ])?,
            model: c1c2_unit_model(),
            propensity: Some(Arc::new(|c: &[f64]| c[0] * c[1])),
            noise_sd: 0.1,
        },
        // One mediator D, independent Q. Columns [D, Q, T].
        "mediation" | "mediation_table2_ii" => ScenarioSpec {
            name: name.to_string(),
            dag: dq_dag(&[("T", "D")]),
            scenario: GenerativeScenario::new(vec![
                ScenarioNode::bernoulli("D", vec![2], |p| 0.8 - 0.6 * p[0]),
                ScenarioNode::uniform("Q"),
                ScenarioNode::bernoulli("T", vec![], |_| 0.5),
            ])?,
            model: dq_model(),
            // p(T=1 | d, q) = p(T=1 | d) by Bayes on D | T ~ Bern(0.8-0.6T).
            propensity: Some(Arc::new(|c: &[f64]| 0.8 - 0.6 * c[0])),
            noise_sd: 0.1,
        },
        // No mediators.
        "mediation_table2_i" => ScenarioSpec {
            name: name.to_string(),
            dag: dq_dag(&[]),
            scenario: GenerativeScenario::new(vec![
                ScenarioNode::bernoulli("D", vec![], |_| 0.5),
                ScenarioNode::uniform("Q"),
                ScenarioNode::bernoulli("T", vec![], |_| 0.5),
            ])?,
            model: dq_model(),
            propensity: Some(Arc::new(|_| 0.5)),
            noise_sd: 0.1,
        },
        // Both mediators: Q = 0.6 U + 0.4 (1 - T).
        "mediation_table2_iii" => ScenarioSpec {
            name: name.to_string(),
            dag: dq_dag(&[("T", "D"), ("T", "Q")]),
            scenario: GenerativeScenario::new(vec![
                ScenarioNode::bernoulli("D", vec![2], |p| 0.8 - 0.6 * p[0]),
                ScenarioNode::transform("Q", vec![2], |p, u| 0.6 * u + 0.4 * (1.0 - p[0])),
                ScenarioNode::bernoulli("T", vec![], |_| 0.5),
            ])?,
            model: dq_model(),
            propensity: None,
            noise_sd: 0.1,
        },
        // Mediators that depend on each other: D | T, Q ~ Bern(4/5 - 3(T+Q)/10).
        "dependent_mediators" => ScenarioSpec {
            name: name.to_string(),
            dag: DagSpec::new(
                names(&["T", "D", "Q", "Y"]),
                edges(&[("T", "D"), ("Q", "D"), ("D", "Y"), ("Q", "Y"), ("T", "Y")]),
                "T",
                "Y",
            ),
            scenario: GenerativeScenario::new(vec![
                ScenarioNode::bernoulli("D", vec![1, 2], |p| 0.8 - 0.3 * (p[1] + p[0]) / 1.0),
                ScenarioNode::uniform("Q"),
                ScenarioNode::bernoulli("T", vec![], |_| 0.5),
            ])?,
            model: dq_model(),
            // p(T=1 | d, q) by Bayes on D | T, Q.
            propensity: Some(Arc::new(|c: &[f64]| {
                let (d, q) = (c[0], c[1]);
                if d == 1.0 {
                    (5.0 - 3.0 * q) / (13.0 - 6.0 * q)
                } else {
                    (5.0 + 3.0 * q) / (7.0 + 6.0 * q)
                }
            })),
            noise_sd: 0.1,
        },
        // Confounders and mediators together. Columns [C1, C2, Q, D, T].
        "mixed" => ScenarioSpec {
            name: name.to_string(),
            dag: DagSpec::new(
                names(&["T", "C1", "C2", "Q", "D", "Y"]),
                edges(&[
                    ("C1", "T"),
                    ("C1", "Q"),
                    ("C1", "D"),
                    ("T", "D"),
                    ("C1", "Y"),
                    ("C2", "Y"),
                    ("Q", "Y"),
                    ("D", "Y"),
                    ("T", "Y"),
                ]),
                "T",
                "Y",
            ),
            scenario: GenerativeScenario::new(vec![
                ScenarioNode::bernoulli("C1", vec![], |_| 0.5),
                ScenarioNode::bernoulli("C2", vec![], |_| 0.5),
                ScenarioNode::bernoulli("Q", vec![0], |p| 1.0 - p[0]),
                ScenarioNode::bernoulli("D", vec![4, 0], |p| 0.8 - 0.3 * (p[0] + p[1])),
                ScenarioNode::bernoulli("T", vec![0], |p| p[0]),
            ])?,
            model: LinearInteractionModel::new(
                0.0,
                1.0,
                vec![1.0, 1.0, 1.0, 1.0],
                vec![1.0, 1.0, 1.0, 1.0],
            ),
            propensity: Some(Arc::new(|c: &[f64]| c[0])),
            noise_sd: 0.1,
        },
        // Fairness attack setting: D is glued to 1 - T on the manifold.
        "adversarial" => ScenarioSpec {
            name: name.to_string(),
            dag: dq_dag(&[("T", "D")]),
            scenario: GenerativeScenario::new(vec![
                ScenarioNode::bernoulli("D", vec![2], |p| 0.99 * (1.0 - p[0]) + 0.01 * p[0]),
                ScenarioNode::uniform("Q"),
                ScenarioNode::bernoulli("T", vec![], |_| 0.5),
            ])?,
            // Placeholder outcome; the adversarial study supplies its own
            // fair / unfair / attacker models.
            model: dq_model(),
            propensity: Some(Arc::new(|c: &[f64]| {
                if c[0] == 1.0 {
                    0.01
                } else {
                    0.99
                }
            })),
            noise_sd: 0.1,
        },
        _ => return Err(unknown()),
    };
    Ok(spec)
}

/// The three black boxes of the adversarial study (columns [D, Q, T]):
/// fair ignores the sensitive attribute, unfair uses it, and the attacker
/// behaves unfairly exactly on the manifold (where t = 1 - d) while looking
/// fair on off-manifold probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversarialModel {
    Fair,
    Unfair,
    Attacker,
}

impl PredictiveModel for AdversarialModel {
    fn predict(&self, features: &[f64]) -> f64 {
        let (d, q, t) = (features[0], features[1], features[2]);
        let unfair = (t + t * d) / 2.0;
        match self {
            AdversarialModel::Fair => q,
            AdversarialModel::Unfair => unfair,
            AdversarialModel::Attacker => {
                if t == 1.0 - d {
                    unfair
                } else {
                    q
                }
            }
        }
    }
}

/// Draw a dataset (covariates, treatment, noisy outcome) from a scenario.
pub fn generate_dataset(spec: &ScenarioSpec, n: usize, seed: u64) -> Result<Dataset> {
    let rows = spec.scenario.sample_marginal(n, derive_seed(seed, "dataset/x"));
    let mut rng = rng_from_seed(derive_seed(seed, "dataset/noise"));
    let m = spec.scenario.n_columns() - 1;
    let covariates: Vec<Vec<f64>> = rows.iter().map(|r| r[..m].to_vec()).collect();
    let treatment: Vec<f64> = rows.iter().map(|r| r[m]).collect();
    let outcome: Vec<f64> = rows
        .iter()
        .map(|r| spec.model.predict(r) + spec.noise_sd * standard_normal(&mut rng))
        .collect();
    Dataset::from_columns(
        spec.dag.covariates(),
        &spec.dag.treatment,
        Some(&spec.dag.outcome),
        covariates,
        treatment,
        outcome,
    )
}

struct Args<'a>(&'a [(&'a str, f64)]);

impl<'a> Args<'a> {
    fn get(&self, key: &str, default: f64) -> f64 {
        self.0
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .unwrap_or(default)
    }

    fn req(&self, key: &str, scenario: &str, quantity: &str) -> Result<f64> {
        self.0
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::InvalidArgument(format!(
                "oracle {scenario}/{quantity} needs argument {key}"
            )))
    }
}

/// Closed-form oracle value for one scenario quantity. Instance coordinates
/// are passed under their column names (e.g. `C1`, `D`, `T`); parameters may
/// be overridden by lowercase keys (`beta`, `gamma1`, `alpha1`, `exponent`,
/// `at`, `ad`, `aq`, `adt`, `aqt`, ...).
pub fn oracle_value(scenario: &str, quantity: &str, args: &[(&str, f64)]) -> Result<f64> {
    let a = Args(args);
    let unknown = |available: &[&str]| Error::UnknownQuantity {
        scenario: scenario.to_string(),
        quantity: quantity.to_string(),
        available: available.iter().map(|s| s.to_string()).collect(),
    };
    match scenario {
        "moderation" => {
            let beta = a.get("beta", 1.0);
            let g1 = a.get("gamma1", 1.0);
            let g2 = a.get("gamma2", 1.0);
            let a1 = a.get("alpha1", A1);
            let a2 = a.get("alpha2", A2);
            let p = a.get("p_treat", 0.5);
            let c1 = || a.req("C1", scenario, quantity);
            let c2 = || a.req("C2", scenario, quantity);
            let t = || a.req("T", scenario, quantity);
            Ok(match quantity {
                // Conditioning on everything makes f exact in both arms.
                "psi_full" => beta + a1 * c1()? + a2 * c2()?,
                // C2 integrates to its mean 1/2 independently of T.
                "psi_c1" => beta + a1 * c1()? + a2 / 2.0,
                "psi_c2" => beta + a1 / 2.0 + a2 * c2()?,
                "psi_empty" => beta + a1 / 2.0 + a2 / 2.0,
                "path_c1" => a1 * (c1()? - 0.5),
                "path_c2" => a2 * (c2()? - 0.5),
                // Randomized treatment: every coalition weight is t - p.
                "weight" => t()? - p,
                // v({C1, T}, t = 1) keeps the gamma terms.
                "v_c1_t1" => beta + g1 * c1()? + g2 / 2.0 + a1 * c1()? + a2 / 2.0,
                "cs_direct" => {
                    (t()? - p)
                        * (beta + a1 / 2.0 * (c1()? + 0.5) + a2 / 2.0 * (c2()? + 0.5))
                }
                // T has no descendants among the covariates.
                "cs_indirect" => 0.0,
                _ => {
                    return Err(unknown(&[
                        "psi_full", "psi_c1", "psi_c2", "psi_empty", "path_c1", "path_c2",
                        "weight", "v_c1_t1", "cs_direct", "cs_indirect",
                    ]))
                }
            })
        }
        "bias" => {
            let beta = a.get("beta", 1.0);
            let g1 = a.get("gamma1", 1.0);
            let a1 = a.get("alpha1", A1);
            let a2 = a.get("alpha2", A2);
            let al = a.get("exponent", 1.0);
            let c1 = || a.req("C1", scenario, quantity);
            let c2 = || a.req("C2", scenario, quantity);
            let t = || a.req("T", scenario, quantity);
            // With p(T=1|c1) = c1^al and C1 ~ U(0,1):
            //   E[C1 | T=1] = (al+1)/(al+2), E[C1 | T=0] = (al+1)/(2(al+2)),
            //   E[T] = 1/(al+1).
            let e1 = (al + 1.0) / (al + 2.0);
            let e0 = (al + 1.0) / (2.0 * (al + 2.0));
            Ok(match quantity {
                "psi_full" => beta + a1 * c1()? + a2 * c2()?,
                "psi_c1" => beta + a1 * c1()? + a2 / 2.0,
                // C1 integrates against its arm-specific conditional mean.
                "psi_c2" => beta + g1 * (e1 - e0) + a1 * e1 + a2 * c2()?,
                "psi_empty" => beta + g1 * (e1 - e0) + a1 * e1 + a2 / 2.0,
                "path_c1" => a1 * (c1()? - e1) - g1 * (e1 - e0),
                "path_c2" => a2 * (c2()? - 0.5),
                "weight_c1" => t()? - c1()?.powf(al),
                "weight_c2" => t()? - 1.0 / (al + 1.0),
                "weight_empty" => t()? - 1.0 / (al + 1.0),
                "e_c1_t1" => e1,
                "e_c1_t0" => e0,
                "cs_indirect" => 0.0,
                _ => {
                    return Err(unknown(&[
                        "psi_full", "psi_c1", "psi_c2", "psi_empty", "path_c1", "path_c2",
                        "weight_c1", "weight_c2", "weight_empty", "e_c1_t1", "e_c1_t0",
                        "cs_indirect",
                    ]))
                }
            })
        }
        "mediation" => {
            let at = a.get("at", 1.0);
            let ad = a.get("ad", 1.0);
            let adt = a.get("adt", 1.0);
            let aqt = a.get("aqt", 1.0);
            let d = || a.req("D", scenario, quantity);
            let q = || a.req("Q", scenario, quantity);
            let t = || a.req("T", scenario, quantity);
            // D | T ~ Bern(0.8 - 0.6 T), so E[D | t] = 0.8 - 0.6 t and by
            // Bayes p(T=1 | d) = 0.8 - 0.6 d.
            Ok(match quantity {
                "psi_full" => at + adt * d()? + aqt * q()?,
                "psi_d" => at + adt * d()? + aqt / 2.0,
                // Conditioning on Q only: D integrates to E[D | arm].
                "psi_q" => at + adt / 5.0 + aqt * q()? - 3.0 * ad / 5.0,
                "psi_empty" => at + adt / 5.0 + aqt / 2.0 - 3.0 * ad / 5.0,
                "path_d" => 3.0 * ad / 5.0 + adt * (d()? - 0.2),
                "path_q" => aqt * (q()? - 0.5),
                "weight_d" => t()? - (0.8 - 0.6 * d()?),
                "weight_q" => t()? - 0.5,
                "weight_empty" => t()? - 0.5,
                "e_d_t" => 0.8 - 0.6 * t()?,
                // Totals over the four coalitions with weights (1/3, 1/6,
                // 1/6, 1/3); only coalitions without D carry indirect flow.
                "cs_direct" => {
                    at * (t()? - 0.5)
                        + adt * (d()? / 2.0 * (t()? - 0.5) + (t()? / 2.0 - 0.1) / 2.0)
                        + aqt * (t()? - 0.5) * (q()? + 0.5) / 2.0
                }
                "cs_indirect" => (ad + adt * t()?) * (0.3 - 0.6 * t()?) / 2.0,
                _ => {
                    return Err(unknown(&[
                        "psi_full", "psi_d", "psi_q", "psi_empty", "path_d", "path_q",
                        "weight_d", "weight_q", "weight_empty", "e_d_t", "cs_direct",
                        "cs_indirect",
                    ]))
                }
            })
        }
        "dependent_mediators" => {
            let at = a.get("at", 1.0);
            let ad = a.get("ad", 1.0);
            let aq = a.get("aq", 1.0);
            let adt = a.get("adt", 1.0);
            let aqt = a.get("aqt", 1.0);
            let d = || a.req("D", scenario, quantity);
            let q = || a.req("Q", scenario, quantity);
            let t = || a.req("T", scenario, quantity);
            // D | T, Q ~ Bern(4/5 - 3(T+Q)/10) with Q ~ U(0,1) gives
            //   E[Q | T=1, d] = (7-4d)/(13-6d), E[Q | T=0, d] = (4+2d)/(7+6d),
            //   p(d=1 | t) = 13/20 - 3t/10,
            //   p(T=1 | d) = (13 - 6d)/20 flipped: 7/20 if d=1, 13/20 if d=0.
            let eq1 = |d: f64| (7.0 - 4.0 * d) / (13.0 - 6.0 * d);
            let eq0 = |d: f64| (4.0 + 2.0 * d) / (7.0 + 6.0 * d);
            Ok(match quantity {
                "psi_full" => at + adt * d()? + aqt * q()?,
                "psi_q" => at + adt * (0.5 - 0.3 * q()?) + aqt * q()? - 0.3 * ad,
                "psi_d" => {
                    let dv = d()?;
                    at + aq * (eq1(dv) - eq0(dv)) + adt * dv + aqt * eq1(dv)
                }
                "psi_empty" => at + 7.0 * adt / 20.0 + aqt / 2.0 - 0.3 * ad,
                "path_q" => {
                    let dv = d()?;
                    aq * (eq0(dv) - eq1(dv)) + aqt * (q()? - eq1(dv))
                }
                "path_d" => 0.3 * ad + adt * (d()? - 0.5 + 0.3 * q()?),
                "path_q_alt" => adt * (0.15 - 0.3 * q()?) + aqt * (q()? - 0.5),
                "e_q_t1_d" => eq1(d()?),
                "e_q_t0_d" => eq0(d()?),
                "e_d_t" => 13.0 / 20.0 - 0.3 * t()?,
                "weight_full" => {
                    let (dv, qv) = (d()?, q()?);
                    let p = if dv == 1.0 {
                        (5.0 - 3.0 * qv) / (13.0 - 6.0 * qv)
                    } else {
                        (5.0 + 3.0 * qv) / (7.0 + 6.0 * qv)
                    };
                    t()? - p
                }
                "weight_d" => t()? - (13.0 - 6.0 * d()?) / 20.0,
                "weight_q" => t()? - 0.5,
                _ => {
                    return Err(unknown(&[
                        "psi_full", "psi_q", "psi_d", "psi_empty", "path_q", "path_d",
                        "path_q_alt", "e_q_t1_d", "e_q_t0_d", "e_d_t", "weight_full",
                        "weight_d", "weight_q",
                    ]))
                }
            })
        }
        "mixed" => {
            let at = a.get("at", 1.0);
            let ad = a.get("ad", 1.0);
            let adt = a.get("adt", 1.0);
            let aqt = a.get("aqt", 1.0);
            let a1t = a.get("a1t", 1.0);
            let a2t = a.get("a2t", 1.0);
            let c1 = || a.req("C1", scenario, quantity);
            let c2 = || a.req("C2", scenario, quantity);
            let d = || a.req("D", scenario, quantity);
            let q = || a.req("Q", scenario, quantity);
            // Q | C1 ~ Bern(1 - C1); D | T, C1 ~ Bern(4/5 - 3(T+C1)/10).
            Ok(match quantity {
                "psi_full" => {
                    at + a1t * c1()? + a2t * c2()? + aqt * q()? + adt * d()?
                }
                "psi_no_q" => {
                    at + a1t * c1()? + a2t * c2()? + aqt * (1.0 - c1()?) + adt * d()?
                }
                "psi_no_d" => {
                    at + a1t * c1()? + a2t * c2()? + aqt * q()? - 0.3 * ad
                        + adt * (0.5 - 0.3 * c1()?)
                }
                "path_q" => aqt * (q()? - (1.0 - c1()?)),
                "path_d" => 0.3 * ad + adt * (d()? - 0.5 + 0.3 * c1()?),
                "path_c2" => a2t * (c2()? - 0.5),
                // E[path_q | C1, C2] = aqt E[Q - (1 - C1) | C1] = 0.
                "expected_path_q" => 0.0,
                _ => {
                    return Err(unknown(&[
                        "psi_full", "psi_no_q", "psi_no_d", "path_q", "path_d", "path_c2",
                        "expected_path_q",
                    ]))
                }
            })
        }
        "adversarial" => {
            let d = || a.req("D", scenario, quantity);
            let t = || a.req("T", scenario, quantity);
            Ok(match quantity {
                // Unfair model f = (t + t d)/2: fully-conditioned effect.
                "unfair_psi_full" => (1.0 + d()?) / 2.0,
                // Fair model ignores T entirely.
                "fair_psi_full" => 0.0,
                "weight_d" => t()? - if d()? == 1.0 { 0.01 } else { 0.99 },
                _ => return Err(unknown(&["unfair_psi_full", "fair_psi_full", "weight_d"])),
            })
        }
        _ => Err(Error::UnknownQuantity {
            scenario: scenario.to_string(),
            quantity: quantity.to_string(),
            available: SCENARIO_NAMES.iter().map(|s| s.to_string()).collect(),
        }),
    }
}

/// How an oracle entry is re-estimated by Monte Carlo.
#[derive(Debug, Clone)]
pub enum Measured {
    /// Psi of the coalition holding the named covariates.
    CoalitionPsi { members: Vec<String> },
    /// Delta of the named path under a variant, via a full explanation.
    PathDelta { path: String, variant: PathVariant },
    /// Psi difference of two explicit coalitions. Used where a full
    /// explanation is impossible because some *other* path's coalition
    /// violates positivity (the mixed scenario: Q mirrors C1 exactly, so
    /// dropping C1 makes one treatment arm a zero-probability event).
    CoalitionDiff {
        with: Vec<String>,
        without: Vec<String>,
    },
    /// Propensity weight of the coalition holding the named covariates.
    Weight { members: Vec<String> },
    /// Causal Shapley direct (true) or indirect (false) total for T.
    CausalSplit { direct: bool },
    /// E[target | evidence], estimated from the exact sampler.
    CondExpectation {
        target: String,
        evidence: Vec<(String, f64)>,
    },
}

/// One closed-form ground-truth value plus the recipe to re-estimate it.
#[derive(Debug, Clone)]
pub struct OracleEntry {
    pub scenario: String,
    pub quantity: String,
    /// Instance coordinates by column name (covariates and T).
    pub instance: Vec<(String, f64)>,
    pub value: f64,
    /// Self-contained derivation note.
    pub provenance: String,
    pub measured: Measured,
}

fn entry(
    scenario: &str,
    quantity: &str,
    instance: &[(&str, f64)],
    provenance: &str,
    measured: Measured,
) -> OracleEntry {
    let args: Vec<(&str, f64)> = instance.to_vec();
    let value = oracle_value(scenario, quantity, &args)
        .unwrap_or_else(|e| panic!("oracle table construction: {e}"));
    OracleEntry {
        scenario: scenario.to_string(),
        quantity: quantity.to_string(),
        instance: instance.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        value,
        provenance: provenance.to_string(),
        measured,
    }
}

fn psi(members: &[&str]) -> Measured {
    Measured::CoalitionPsi {
        members: members.iter().map(|s| s.to_string()).collect(),
    }
}

fn weight(members: &[&str]) -> Measured {
    Measured::Weight {
        members: members.iter().map(|s| s.to_string()).collect(),
    }
}

fn path(p: &str, variant: PathVariant) -> Measured {
    Measured::PathDelta {
        path: p.to_string(),
        variant,
    }
}

/// The full oracle table: every closed-form quantity at pinned instances.
pub fn oracle_table() -> Vec<OracleEntry> {
    let m_inst: &[(&str, f64)] = &[("C1", 0.25), ("C2", 0.5), ("T", 1.0)];
    let b_inst: &[(&str, f64)] = &[("C1", 0.25), ("C2", 0.5), ("T", 1.0)];
    let d_inst: &[(&str, f64)] = &[("D", 1.0), ("Q", 0.3), ("T", 1.0)];
    let d_inst0: &[(&str, f64)] = &[("D", 1.0), ("Q", 0.3), ("T", 0.0)];
    let f_inst: &[(&str, f64)] = &[("D", 0.0), ("Q", 0.3), ("T", 1.0)];
    let x_inst: &[(&str, f64)] =
        &[("C1", 1.0), ("C2", 0.0), ("Q", 0.0), ("D", 0.0), ("T", 1.0)];
    vec![
        // ---- moderation: f = t + c1 + c2 + 2 t c1 + 4 t c2, T ~ Bern(1/2).
        entry("moderation", "psi_full", m_inst,
            "Psi(c1,c2) = beta + a1 c1 + a2 c2: conditioning on both covariates leaves no randomness",
            psi(&["C1", "C2"])),
        entry("moderation", "psi_c1", m_inst,
            "C2 ~ U(0,1) independent of C1 and T, so it integrates to 1/2 in each arm",
            psi(&["C1"])),
        entry("moderation", "psi_c2", m_inst,
            "C1 integrates to 1/2 in each arm",
            psi(&["C2"])),
        entry("moderation", "psi_empty", m_inst,
            "both covariates integrate to 1/2",
            psi(&[])),
        entry("moderation", "path_c1", m_inst,
            "Psi(full) - Psi(without C1) = a1 (c1 - 1/2)",
            path("C1", PathVariant::Standard)),
        entry("moderation", "path_c2", m_inst,
            "Psi(full) - Psi(without C2) = a2 (c2 - 1/2)",
            path("C2", PathVariant::Standard)),
        entry("moderation", "weight", m_inst,
            "randomized treatment: p(T=1 | anything) = 1/2, weight = t - 1/2",
            weight(&["C1"])),
        entry("moderation", "cs_direct", m_inst,
            "sum over coalitions of (t - p)(beta + a1 m1(S) + a2 m2(S)) with Shapley weights 1/3, 1/6, 1/6, 1/3",
            Measured::CausalSplit { direct: true }),
        entry("moderation", "cs_indirect", m_inst,
            "T has no descendants among the covariates, so do(T) changes nothing downstream",
            Measured::CausalSplit { direct: false }),
        // ---- bias: same f, p(T=1 | c1) = c1.
        entry("bias", "psi_full", b_inst,
            "conditioning on both covariates leaves no randomness",
            psi(&["C1", "C2"])),
        entry("bias", "psi_c1", b_inst,
            "C2 is independent of (C1, T) and integrates to 1/2",
            psi(&["C1"])),
        entry("bias", "psi_c2", b_inst,
            "C1 | T=t has mean (al+1)/(al+2) in the treated arm and half that untreated (al = 1)",
            psi(&["C2"])),
        entry("bias", "psi_empty", b_inst,
            "as psi_c2 with C2 integrated to 1/2",
            psi(&[])),
        entry("bias", "path_c1", b_inst,
            "Psi(full) - Psi(without C1): the confounder shifts by its treated-arm mean and drags gamma1 along",
            path("C1", PathVariant::Standard)),
        entry("bias", "path_c2", b_inst,
            "C2 is not a confounder: a2 (c2 - 1/2) as in the randomized case",
            path("C2", PathVariant::Standard)),
        entry("bias", "weight_c1", b_inst,
            "p(T=1 | c1) = c1^al, so the weight is t - c1^al",
            weight(&["C1"])),
        entry("bias", "weight_c2", b_inst,
            "marginally E[T] = E[C1^al] = 1/(al+1)",
            weight(&["C2"])),
        entry("bias", "e_c1_t1", &[("T", 1.0)],
            "density of C1 | T=1 is proportional to c^al on (0,1): mean (al+1)/(al+2)",
            Measured::CondExpectation {
                target: "C1".into(),
                evidence: vec![("T".into(), 1.0)],
            }),
        entry("bias", "e_c1_t0", &[("T", 0.0)],
            "density of C1 | T=0 is proportional to 1 - c^al: mean (al+1)/(2(al+2))",
            Measured::CondExpectation {
                target: "C1".into(),
                evidence: vec![("T".into(), 0.0)],
            }),
        entry("bias", "cs_indirect", b_inst,
            "T has no descendants among the covariates",
            Measured::CausalSplit { direct: false }),
        // ---- mediation: f = t + d + q + t d + t q, D | T ~ Bern(0.8 - 0.6T).
        entry("mediation", "psi_full", d_inst,
            "conditioning on both covariates leaves no randomness",
            psi(&["D", "Q"])),
        entry("mediation", "psi_d", d_inst,
            "Q is independent of (D, T) and integrates to 1/2",
            psi(&["D"])),
        entry("mediation", "psi_q", d_inst,
            "D | T=t has mean 0.8 - 0.6t: the ad term contributes -0.6 ad and the interaction 0.2 adt",
            psi(&["Q"])),
        entry("mediation", "psi_empty", d_inst,
            "as psi_q with Q integrated to 1/2",
            psi(&[])),
        entry("mediation", "path_d", d_inst,
            "Psi(full) - Psi(without D) = 0.6 ad + adt (d - 0.2)",
            path("D", PathVariant::Standard)),
        entry("mediation", "path_q", d_inst,
            "Q is not a mediator: aqt (q - 1/2)",
            path("Q", PathVariant::Standard)),
        entry("mediation", "weight_d", d_inst,
            "Bayes: p(T=1 | d) = 0.8 - 0.6 d",
            weight(&["D"])),
        entry("mediation", "weight_q", d_inst,
            "Q carries no information about T: weight = t - 1/2",
            weight(&["Q"])),
        entry("mediation", "e_d_t", &[("T", 1.0)],
            "E[D | T=1] = 0.8 - 0.6 = 0.2",
            Measured::CondExpectation {
                target: "D".into(),
                evidence: vec![("T".into(), 1.0)],
            }),
        entry("mediation", "cs_direct", d_inst,
            "coalition-weighted sum of treated-vs-sampled contrasts under do; the interaction makes it instance-dependent",
            Measured::CausalSplit { direct: true }),
        entry("mediation", "cs_indirect", d_inst,
            "do(T=t) moves E[D] from 1/2 to 0.8 - 0.6t in the two coalitions without D (total Shapley weight 1/2); every D term of f, ad + adt t, picks up the shift",
            Measured::CausalSplit { direct: false }),
        entry("mediation", "cs_indirect", d_inst0,
            "untreated arm of the same total: (ad)(0.3)/2",
            Measured::CausalSplit { direct: false }),
        // ---- dependent mediators: D | T, Q ~ Bern(4/5 - 3(T+Q)/10).
        entry("dependent_mediators", "psi_full", d_inst,
            "conditioning on both covariates leaves no randomness",
            psi(&["D", "Q"])),
        entry("dependent_mediators", "psi_q", d_inst,
            "E[D | T=t, q] = 4/5 - 3(t+q)/10 enters both the ad and adt terms",
            psi(&["Q"])),
        entry("dependent_mediators", "psi_d", d_inst,
            "E[Q | T=1, d] = (7-4d)/(13-6d) and E[Q | T=0, d] = (4+2d)/(7+6d) by Bayes against the U(0,1) prior",
            psi(&["D"])),
        entry("dependent_mediators", "psi_empty", d_inst,
            "E[D | t] = 13/20 - 3t/10 and E[Q | t] = 1/2",
            psi(&[])),
        entry("dependent_mediators", "path_q", d_inst,
            "difference of the fully-conditioned effect and psi_d",
            path("Q", PathVariant::Standard)),
        entry("dependent_mediators", "path_d", d_inst,
            "difference of the fully-conditioned effect and psi_q",
            path("D", PathVariant::Standard)),
        entry("dependent_mediators", "path_q_alt", d_inst,
            "psi_q - psi_empty; integrates to zero over Q ~ U(0,1)",
            path("Q", PathVariant::Alternative)),
        entry("dependent_mediators", "e_q_t1_d", d_inst,
            "Bayes: density of Q | T=1, D=1 proportional to 1/2 - 3q/10; mean 3/7 at d = 1",
            Measured::CondExpectation {
                target: "Q".into(),
                evidence: vec![("T".into(), 1.0), ("D".into(), 1.0)],
            }),
        entry("dependent_mediators", "e_q_t0_d", f_inst,
            "density of Q | T=0, D=0 proportional to 1/5 + 3q/10; mean 4/7 at d = 0",
            Measured::CondExpectation {
                target: "Q".into(),
                evidence: vec![("T".into(), 0.0), ("D".into(), 0.0)],
            }),
        entry("dependent_mediators", "weight_full", d_inst,
            "p(T=1 | d=1, q) = (5-3q)/(13-6q) by Bayes on the D kernel",
            weight(&["D", "Q"])),
        entry("dependent_mediators", "weight_d", d_inst,
            "p(T=1 | d) = (13-6d)/20 flipped through Bayes: 7/20 at d=1",
            weight(&["D"])),
        // ---- mixed block: confounder C1, moderator C2, mediators Q and D.
        entry("mixed", "psi_full", x_inst,
            "conditioning on every covariate leaves no randomness",
            psi(&["C1", "C2", "Q", "D"])),
        entry("mixed", "psi_no_q", x_inst,
            "Q | C1 ~ Bern(1 - c1) is independent of T and D given C1",
            psi(&["C1", "C2", "D"])),
        entry("mixed", "psi_no_d", x_inst,
            "E[D | T=t, c1] = 4/5 - 3(t+c1)/10 enters the ad and adt terms",
            psi(&["C1", "C2", "Q"])),
        entry("mixed", "path_q", x_inst,
            "aqt (q - (1 - c1)): centering at the C1-conditional mean of Q",
            Measured::CoalitionDiff {
                with: vec!["C1".into(), "C2".into(), "Q".into(), "D".into()],
                without: vec!["C1".into(), "C2".into(), "D".into()],
            }),
        entry("mixed", "path_d", x_inst,
            "0.3 ad + adt (d - 1/2 + 0.3 c1)",
            Measured::CoalitionDiff {
                with: vec!["C1".into(), "C2".into(), "Q".into(), "D".into()],
                without: vec!["C1".into(), "C2".into(), "Q".into()],
            }),
        entry("mixed", "path_c2", x_inst,
            "C2 ~ Bern(1/2) independent of everything: a2t (c2 - 1/2)",
            Measured::CoalitionDiff {
                with: vec!["C1".into(), "C2".into(), "Q".into(), "D".into()],
                without: vec!["C1".into(), "Q".into(), "D".into()],
            }),
    ]
}

/// Result of re-estimating one oracle entry.
#[derive(Debug, Clone, Serialize)]
pub struct OracleCheck {
    pub scenario: String,
    pub quantity: String,
    pub oracle: f64,
    pub estimate: f64,
    pub se: f64,
    /// |estimate - oracle| in standard-error units (clamped at se >= 1e-9).
    pub z: f64,
    pub pass: bool,
}

/// Monte Carlo re-estimate of one entry at the given budget; `pass` marks
/// agreement within `z_tol` standard errors.
pub fn check_entry(
    entry: &OracleEntry,
    n_draws: usize,
    seed: u64,
    z_tol: f64,
) -> Result<OracleCheck> {
    let spec = scenario(&entry.scenario)?;
    let columns = spec.scenario.column_names();
    let col = |name: &str| -> Result<usize> {
        columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    };
    let mut features = vec![f64::NAN; columns.len()];
    for (name, v) in &entry.instance {
        features[col(name)?] = *v;
    }
    let m = columns.len() - 1;
    let settings = PwshapSettings {
        n_draws,
        seed,
        ..PwshapSettings::default()
    };
    let explainer = PwshapExplainer {
        dag: &spec.dag,
        model: &spec.model,
        sampler: &spec.scenario,
        propensity: None,
    };
    let est: ValueEstimate = match &entry.measured {
        Measured::CoalitionPsi { members } => {
            let idx: Vec<usize> = members.iter().map(|n| col(n)).collect::<Result<_>>()?;
            let (effect, _) =
                explainer.coalition_effect(Coalition::from_members(&idx, m), &features, &settings)?;
            effect.psi
        }
        Measured::Weight { members } => {
            let idx: Vec<usize> = members.iter().map(|n| col(n)).collect::<Result<_>>()?;
            let (effect, _) =
                explainer.coalition_effect(Coalition::from_members(&idx, m), &features, &settings)?;
            ValueEstimate {
                mean: effect.weight.value,
                se: effect.weight.propensity_se,
                n_draws,
            }
        }
        Measured::PathDelta { path, variant } => {
            let mut s = settings;
            s.variant = *variant;
            let report = explainer.explain(&features, &s)?;
            let p = report
                .paths
                .iter()
                .find(|p| p.path == *path)
                .ok_or_else(|| Error::UnknownNode(path.clone()))?;
            p.delta
        }
        Measured::CoalitionDiff { with, without } => {
            let a: Vec<usize> = with.iter().map(|n| col(n)).collect::<Result<_>>()?;
            let b: Vec<usize> = without.iter().map(|n| col(n)).collect::<Result<_>>()?;
            let (ea, _) =
                explainer.coalition_effect(Coalition::from_members(&a, m), &features, &settings)?;
            let (eb, _) =
                explainer.coalition_effect(Coalition::from_members(&b, m), &features, &settings)?;
            ea.psi.minus(&eb.psi)
        }
        Measured::CausalSplit { direct } => {
            let config = ShapleyConfig {
                mode: ReferenceMode::Causal,
                n_draws,
                seed,
            };
            let (d, i) =
                causal_shapley_split(&spec.model, &spec.scenario, &features, m, &config)?;
            if *direct {
                d
            } else {
                i
            }
        }
        Measured::CondExpectation { target, evidence } => {
            let known: Vec<(usize, f64)> = evidence
                .iter()
                .map(|(n, v)| Ok((col(n)?, *v)))
                .collect::<Result<_>>()?;
            let batch = spec.scenario.sample_conditional(
                &known,
                n_draws,
                derive_seed(seed, "oracle/cond"),
            )?;
            let tcol = col(target)?;
            ValueEstimate::from_draws(&batch.iter().map(|r| r[tcol]).collect::<Vec<_>>())
        }
    };
    let se = est.se.max(1e-9);
    let z = (est.mean - entry.value).abs() / se;
    Ok(OracleCheck {
        scenario: entry.scenario.clone(),
        quantity: entry.quantity.clone(),
        oracle: entry.value,
        estimate: est.mean,
        se: est.se,
        z,
        pass: z <= z_tol || (est.mean - entry.value).abs() < 1e-9,
    })
}
