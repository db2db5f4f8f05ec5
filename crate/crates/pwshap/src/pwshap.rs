//! Path-wise Shapley effects: coalition-wise treatment effects, propensity
//! weights, the phi = w * psi decomposition, path-wise differences, and the
//! perturbation bounds used to audit estimation error.
//!
//! Column layout everywhere: covariates in DAG order, treatment last. A
//! coalition is a set of covariates conditioned at the explained instance's
//! values; the treatment is always part of the conditioning with an explicit
//! arm.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DagSpec, PathRole};
use crate::model::{clip_propensity, PredictiveModel, PropensityModel};
use crate::rng::{derive_seed, derive_seed_u64};
use crate::sampler::ReferenceSampler;
use crate::shapley::{Coalition, ReferenceMode, ValueEstimate};

/// What to do when a coalition's propensity leaves no overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapPolicy {
    /// Clamp the propensity into [eps, 1 - eps] before weighting.
    Clip,
    /// Refuse to explain: raise an error naming the offending coalition.
    Strict,
}

/// Which pair of coalition effects a path-wise effect differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathVariant {
    /// Condition on everything vs. everything minus the path's inner nodes.
    Standard,
    /// Condition on the inner nodes alone vs. nothing.
    Alternative,
}

/// Tuning for one explanation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PwshapSettings {
    pub mode: ReferenceMode,
    pub n_draws: usize,
    pub seed: u64,
    pub clip_epsilon: f64,
    pub overlap: OverlapPolicy,
    pub variant: PathVariant,
    /// Also report merged node-group paths for overlapping routes.
    pub include_merged: bool,
}

impl Default for PwshapSettings {
    fn default() -> Self {
        PwshapSettings {
            mode: ReferenceMode::OnManifold,
            n_draws: 10_000,
            seed: 0,
            clip_epsilon: 0.01,
            overlap: OverlapPolicy::Clip,
            variant: PathVariant::Standard,
            include_merged: false,
        }
    }
}

/// t - p(T = 1 | conditioned covariates), the factor linking a coalition
/// effect to its contribution to the treatment's Shapley value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropensityWeight {
    pub coalition: String,
    pub propensity: f64,
    pub propensity_se: f64,
    /// t - propensity (after the overlap policy is applied).
    pub value: f64,
    /// "sampled" (estimated from the reference sampler) or
    /// "fitted_marginalized" (a fitted model averaged over the coalition's
    /// conditional law).
    pub source: String,
    pub clipped: bool,
}

/// The coalition-wise Shapley effect Psi and its propensity-weighted
/// contribution phi to the treatment's Shapley value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoalitionEffect {
    pub coalition: String,
    pub members: Vec<String>,
    /// Psi = v(S u {T}, c_S, 1) - v(S u {T}, c_S, 0).
    pub psi: ValueEstimate,
    pub weight: PropensityWeight,
    /// phi = weight * psi, the marginal contribution of adding T to S. Held
    /// to the identity exactly: phi.mean == weight.value * psi.mean.
    pub phi: ValueEstimate,
    /// Psi re-estimated by the three-step division route (independent
    /// marginal contribution divided by a fitted weight); present only when
    /// a fitted propensity model is supplied.
    pub psi_division: Option<ValueEstimate>,
    pub interpretation: String,
}

/// A path-wise effect: how much of the treatment effect flows along a path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathEffect {
    pub path: String,
    pub role: PathRole,
    pub variant: PathVariant,
    pub merged: bool,
    pub psi_with: ValueEstimate,
    pub psi_without: ValueEstimate,
    /// psi_with - psi_without (for the direct path, the fully-adjusted
    /// effect itself).
    pub delta: ValueEstimate,
    /// Weight of the conditioned-on-everything coalition backing psi_with.
    pub weight: f64,
}

/// Versioned output of one explanation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PwshapReport {
    pub version: u32,
    pub feature_names: Vec<String>,
    pub features: Vec<f64>,
    pub treatment: f64,
    pub settings: PwshapSettings,
    pub coalitions: Vec<CoalitionEffect>,
    pub paths: Vec<PathEffect>,
    pub warnings: Vec<String>,
}

pub const REPORT_VERSION: u32 = 1;

impl PwshapReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: PwshapReport = serde_json::from_str(text)?;
        if report.version != REPORT_VERSION {
            return Err(Error::Schema(format!(
                "report version {} unsupported (expected {REPORT_VERSION})",
                report.version
            )));
        }
        Ok(report)
    }

    /// Flat per-path summary: path, role, psi, se, weight, method.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("path,role,psi,se,weight,method\n");
        for p in &self.paths {
            let role = serde_json::to_value(p.role)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default();
            let method = format!(
                "{}/{}",
                match p.variant {
                    PathVariant::Standard => "standard",
                    PathVariant::Alternative => "alternative",
                },
                match self.settings.mode {
                    ReferenceMode::OnManifold => "on_manifold",
                    ReferenceMode::OffManifold => "off_manifold",
                    ReferenceMode::Causal => "causal",
                }
            );
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                p.path, role, p.delta.mean, p.delta.se, p.weight, method
            ));
        }
        out
    }
}

/// Everything needed to explain instances of one model under one DAG.
pub struct PwshapExplainer<'a> {
    pub dag: &'a DagSpec,
    pub model: &'a dyn PredictiveModel,
    pub sampler: &'a dyn ReferenceSampler,
    /// Fitted propensity for the three-step division route; when absent, the
    /// coalition propensities are estimated from the reference sampler.
    pub propensity: Option<&'a dyn PropensityModel>,
}

impl<'a> PwshapExplainer<'a> {
    fn n_covariates(&self) -> usize {
        self.dag.covariates().len()
    }

    fn treatment_column(&self) -> usize {
        self.n_covariates()
    }

    /// v(S u {T}, c_S, arm): condition on the coalition covariates and the
    /// treatment arm, average the model.
    fn arm_value(
        &self,
        coalition: Coalition,
        arm: f64,
        features: &[f64],
        settings: &PwshapSettings,
        warnings: &mut Vec<String>,
    ) -> Result<ValueEstimate> {
        let t_col = self.treatment_column();
        let mut fixed: Vec<(usize, f64)> = coalition
            .members()
            .iter()
            .map(|&i| (i, features[i]))
            .collect();
        fixed.push((t_col, arm));
        let seed = derive_seed(
            settings.seed,
            &format!("psi/mask={}/arm={arm}", coalition.mask),
        );
        let batch = match settings.mode {
            ReferenceMode::OnManifold => {
                self.sampler.sample_conditional(&fixed, settings.n_draws, seed)?
            }
            ReferenceMode::OffManifold => {
                let mut b = self.sampler.sample_marginal(settings.n_draws, seed)?;
                for row in &mut b.rows {
                    for &(i, v) in &fixed {
                        row[i] = v;
                    }
                }
                b
            }
            ReferenceMode::Causal => self.sampler.sample_do(&fixed, settings.n_draws, seed)?,
        };
        if let Some(w) = batch.warning {
            warnings.push(w);
        }
        Ok(ValueEstimate::from_draws(
            &batch.rows.iter().map(|r| self.model.predict(r)).collect::<Vec<_>>(),
        ))
    }

    /// p(T = 1 | c_S) plus its provenance, before the overlap policy.
    fn raw_propensity(
        &self,
        coalition: Coalition,
        features: &[f64],
        settings: &PwshapSettings,
    ) -> Result<(f64, f64, String)> {
        let fixed: Vec<(usize, f64)> = coalition
            .members()
            .iter()
            .map(|&i| (i, features[i]))
            .collect();
        let seed = derive_seed(settings.seed, &format!("prop/mask={}", coalition.mask));
        match self.propensity {
            Some(model) => {
                let m = self.n_covariates();
                if coalition.size() == m {
                    let p = model.propensity_raw(&features[..m]);
                    Ok((p, 0.0, "fitted_marginalized".to_string()))
                } else {
                    // Tower property: p(T=1 | c_S) = E[p(T=1 | C) | c_S].
                    let batch = self
                        .sampler
                        .sample_conditional(&fixed, settings.n_draws, seed)?;
                    let draws: Vec<f64> = batch
                        .rows
                        .iter()
                        .map(|r| model.propensity_raw(&r[..m]))
                        .collect();
                    let est = ValueEstimate::from_draws(&draws);
                    Ok((est.mean, est.se, "fitted_marginalized".to_string()))
                }
            }
            None => {
                let t_col = self.treatment_column();
                let batch = self
                    .sampler
                    .sample_conditional(&fixed, settings.n_draws, seed)?;
                let draws: Vec<f64> = batch.rows.iter().map(|r| r[t_col]).collect();
                let est = ValueEstimate::from_draws(&draws);
                Ok((est.mean, est.se, "sampled".to_string()))
            }
        }
    }

    fn weight_for(
        &self,
        coalition: Coalition,
        features: &[f64],
        settings: &PwshapSettings,
        label: &str,
    ) -> Result<PropensityWeight> {
        let t = features[self.treatment_column()];
        let (p_raw, p_se, source) = self.raw_propensity(coalition, features, settings)?;
        let raw_weight = t - p_raw;
        match settings.overlap {
            OverlapPolicy::Strict => {
                if raw_weight.abs() < settings.clip_epsilon {
                    return Err(Error::NearZeroWeight {
                        coalition: label.to_string(),
                        weight: raw_weight,
                        clip_epsilon: settings.clip_epsilon,
                    });
                }
                Ok(PropensityWeight {
                    coalition: label.to_string(),
                    propensity: p_raw,
                    propensity_se: p_se,
                    value: raw_weight,
                    source,
                    clipped: false,
                })
            }
            OverlapPolicy::Clip => {
                let p = clip_propensity(p_raw, settings.clip_epsilon);
                Ok(PropensityWeight {
                    coalition: label.to_string(),
                    propensity: p,
                    propensity_se: p_se,
                    value: t - p,
                    source,
                    clipped: p != p_raw,
                })
            }
        }
    }

    fn interpretation(&self, coalition: Coalition, settings: &PwshapSettings) -> String {
        match settings.mode {
            ReferenceMode::Causal => "CDE".to_string(),
            _ => {
                if coalition.size() == self.n_covariates() {
                    "CATE".to_string()
                } else if coalition.size() == 0 {
                    "base".to_string()
                } else {
                    // A conditional contrast, but confounded by whatever is
                    // left out; "CATE" only in quotes.
                    "'CATE'".to_string()
                }
            }
        }
    }

    /// Full coalition effect: two-arm Psi, weight, phi, and (with a fitted
    /// propensity) the division-route re-estimate.
    pub fn coalition_effect(
        &self,
        coalition: Coalition,
        features: &[f64],
        settings: &PwshapSettings,
    ) -> Result<(CoalitionEffect, Vec<String>)> {
        let covs = self.dag.covariates();
        let members: Vec<String> = coalition.members().iter().map(|&i| covs[i].clone()).collect();
        let label = coalition.label(&covs);
        let mut warnings = Vec::new();

        let v1 = self.arm_value(coalition, 1.0, features, settings, &mut warnings)?;
        let v0 = self.arm_value(coalition, 0.0, features, settings, &mut warnings)?;
        let psi = v1.minus(&v0);
        let weight = self.weight_for(coalition, features, settings, &label)?;

        // phi = w * psi by construction; the delta-method standard error
        // accounts for noise in both factors.
        let phi = ValueEstimate {
            mean: weight.value * psi.mean,
            se: (weight.value * weight.value * psi.se * psi.se
                + psi.mean * psi.mean * weight.propensity_se * weight.propensity_se)
                .sqrt(),
            n_draws: psi.n_draws,
        };

        let psi_division = if self.propensity.is_some() {
            Some(self.division_route_psi(coalition, features, settings, &weight, &mut warnings)?)
        } else {
            None
        };
        if let (Some(div), true) = (&psi_division, true) {
            let gap = (div.mean - psi.mean).abs();
            let tol = 5.0 * (div.se * div.se + psi.se * psi.se).sqrt().max(1e-9);
            if gap > tol {
                warnings.push(format!(
                    "coalition {label}: division-route psi {:.4} and direct psi {:.4} disagree beyond 5 combined standard errors",
                    div.mean, psi.mean
                ));
            }
        }

        Ok((
            CoalitionEffect {
                coalition: label,
                members,
                psi,
                weight,
                phi,
                psi_division,
                interpretation: self.interpretation(coalition, settings),
            },
            warnings,
        ))
    }

    /// Three-step route: independent marginal contribution
    /// v(S u {T}, t_obs) - v(S), divided by the fitted weight.
    fn division_route_psi(
        &self,
        coalition: Coalition,
        features: &[f64],
        settings: &PwshapSettings,
        weight: &PropensityWeight,
        warnings: &mut Vec<String>,
    ) -> Result<ValueEstimate> {
        let t = features[self.treatment_column()];
        let v_with_t = self.arm_value(coalition, t, features, settings, warnings)?;
        // v(S): the treatment is absent, i.e. drawn along with the other
        // unconditioned columns.
        let fixed: Vec<(usize, f64)> = coalition
            .members()
            .iter()
            .map(|&i| (i, features[i]))
            .collect();
        let seed = derive_seed(settings.seed, &format!("vind/mask={}", coalition.mask));
        let batch = match settings.mode {
            ReferenceMode::OnManifold => {
                self.sampler.sample_conditional(&fixed, settings.n_draws, seed)?
            }
            ReferenceMode::OffManifold => {
                let mut b = self.sampler.sample_marginal(settings.n_draws, seed)?;
                for row in &mut b.rows {
                    for &(i, v) in &fixed {
                        row[i] = v;
                    }
                }
                b
            }
            ReferenceMode::Causal => self.sampler.sample_do(&fixed, settings.n_draws, seed)?,
        };
        if let Some(w) = batch.warning {
            warnings.push(w);
        }
        let v_s = ValueEstimate::from_draws(
            &batch.rows.iter().map(|r| self.model.predict(r)).collect::<Vec<_>>(),
        );
        let phi_indep = v_with_t.minus(&v_s);
        Ok(phi_indep.scale(1.0 / weight.value))
    }

    /// Independent-draws marginal contribution v(S u {T}, t_obs) - v(S),
    /// without the shared-draw construction; used to cross-check the
    /// phi = w * psi identity statistically.
    pub fn marginal_contribution_independent(
        &self,
        coalition: Coalition,
        features: &[f64],
        settings: &PwshapSettings,
    ) -> Result<ValueEstimate> {
        let mut warnings = Vec::new();
        let t = features[self.treatment_column()];
        let v_with_t = self.arm_value(coalition, t, features, settings, &mut warnings)?;
        let fixed: Vec<(usize, f64)> = coalition
            .members()
            .iter()
            .map(|&i| (i, features[i]))
            .collect();
        let seed = derive_seed(settings.seed, &format!("vind/mask={}", coalition.mask));
        let batch = self
            .sampler
            .sample_conditional(&fixed, settings.n_draws, seed)?;
        let v_s = ValueEstimate::from_draws(
            &batch.rows.iter().map(|r| self.model.predict(r)).collect::<Vec<_>>(),
        );
        Ok(v_with_t.minus(&v_s))
    }

    /// Explain one instance: coalition effects for every coalition a path
    /// needs, plus the path-wise differences.
    pub fn explain(
        &self,
        features: &[f64],
        settings: &PwshapSettings,
    ) -> Result<PwshapReport> {
        let m = self.n_covariates();
        if features.len() != m + 1 {
            return Err(Error::Schema(format!(
                "instance has {} features; DAG implies {} covariates + treatment",
                features.len(),
                m
            )));
        }
        if m > 20 {
            return Err(Error::TooManyFeatures { n: m });
        }
        let t = features[m];
        if t != 0.0 && t != 1.0 {
            return Err(Error::NonBinaryTreatment {
                column: self.dag.treatment.clone(),
                value: t,
            });
        }
        let paths = self.dag.enumerate_paths(settings.include_merged)?;
        let covs = self.dag.covariates();
        let cov_index = |name: &str| covs.iter().position(|c| c == name).unwrap();

        let full = Coalition::full(m);
        let empty = Coalition::empty(m);
        let mut needed: BTreeSet<u32> = BTreeSet::new();
        needed.insert(full.mask);
        needed.insert(empty.mask);
        for p in &paths {
            let inner: Vec<usize> = p.inner_nodes.iter().map(|n| cov_index(n)).collect();
            let inner_c = Coalition::from_members(&inner, m);
            match settings.variant {
                PathVariant::Standard => {
                    needed.insert(full.mask & !inner_c.mask);
                }
                PathVariant::Alternative => {
                    needed.insert(inner_c.mask);
                }
            }
        }

        let masks: Vec<u32> = needed.into_iter().collect();
        let computed: Vec<(CoalitionEffect, Vec<String>)> = masks
            .par_iter()
            .map(|&mask| self.coalition_effect(Coalition { mask, m }, features, settings))
            .collect::<Result<_>>()?;
        let mut warnings: Vec<String> = Vec::new();
        let mut effects: std::collections::HashMap<u32, CoalitionEffect> =
            std::collections::HashMap::new();
        for (mask, (effect, ws)) in masks.iter().zip(computed) {
            warnings.extend(ws);
            effects.insert(*mask, effect);
        }
        warnings.dedup();

        let zero = ValueEstimate::exact(0.0);
        let mut path_effects = Vec::new();
        for p in &paths {
            let inner: Vec<usize> = p.inner_nodes.iter().map(|n| cov_index(n)).collect();
            let inner_c = Coalition::from_members(&inner, m);
            let (with_c, without_c) = if p.is_direct() {
                (full, full)
            } else {
                match settings.variant {
                    PathVariant::Standard => (
                        full,
                        Coalition {
                            mask: full.mask & !inner_c.mask,
                            m,
                        },
                    ),
                    PathVariant::Alternative => (inner_c, empty),
                }
            };
            let psi_with = effects[&with_c.mask].psi;
            let (psi_without, delta) = if p.is_direct() {
                (zero, psi_with)
            } else {
                let without = effects[&without_c.mask].psi;
                (without, psi_with.minus(&without))
            };
            path_effects.push(PathEffect {
                path: p.label(),
                role: p.role,
                variant: settings.variant,
                merged: p.merged,
                psi_with,
                psi_without,
                delta,
                weight: effects[&with_c.mask].weight.value,
            });
        }

        let mut coalitions: Vec<CoalitionEffect> = effects.into_values().collect();
        coalitions.sort_by(|a, b| (a.members.len(), &a.members).cmp(&(b.members.len(), &b.members)));

        Ok(PwshapReport {
            version: REPORT_VERSION,
            feature_names: {
                let mut n = covs.clone();
                n.push(self.dag.treatment.clone());
                n
            },
            features: features.to_vec(),
            treatment: t,
            settings: *settings,
            coalitions,
            paths: path_effects,
            warnings,
        })
    }
}

/// E over instances drawn from the sampler's marginal of a per-instance
/// statistic, with across-instance standard error. Parallelised with
/// per-instance seeds so the result does not depend on the thread count.
pub fn expectation_over_instances<F>(
    sampler: &dyn ReferenceSampler,
    n_instances: usize,
    seed: u64,
    stat: F,
) -> Result<ValueEstimate>
where
    F: Fn(&[f64], u64) -> Result<f64> + Sync,
{
    let instances = sampler
        .sample_marginal(n_instances, derive_seed(seed, "integration/outer"))?
        .rows;
    let draws: Vec<f64> = instances
        .par_iter()
        .enumerate()
        .map(|(i, row)| stat(row, derive_seed_u64(seed, i as u64)))
        .collect::<Result<_>>()?;
    Ok(ValueEstimate::from_draws(&draws))
}

/// Worst-case drift of phi = w * psi when the value function is off by at
/// most `e` uniformly (the weight is exact and |w| <= 1, psi differences two
/// values).
pub fn phi_perturbation_bound(e: f64) -> f64 {
    2.0 * e
}

/// Worst-case drift of a path-wise effect under the same perturbation: a
/// difference of two coalition effects, each off by at most 2e.
pub fn path_perturbation_bound(e: f64) -> f64 {
    4.0 * e
}

/// Worst-case drift of the division-route psi when the Shapley contribution
/// is off by `e_shap`, the propensity by `e_prop`, overlap is at least `eps`,
/// and the model is bounded by `sup_f` on its domain.
pub fn division_route_bound(e_shap: f64, e_prop: f64, eps: f64, sup_f: f64) -> f64 {
    4.0 * e_shap / eps + 4.0 * sup_f * e_prop / (eps * eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FnPropensity, LinearInteractionModel};
    use crate::scenario::{GenerativeScenario, ScenarioNode};
    use approx::assert_abs_diff_eq;

    const BETA: f64 = 1.0;
    const G1: f64 = 1.0;
    const G2: f64 = 1.0;
    const A1: f64 = 2.0;
    const A2: f64 = 4.0;

    fn moderation_dag() -> DagSpec {
        DagSpec::new(
            vec!["T".into(), "C1".into(), "C2".into(), "Y".into()],
            vec![
                ("C1".into(), "Y".into()),
                ("C2".into(), "Y".into()),
                ("T".into(), "Y".into()),
            ],
            "T",
            "Y",
        )
    }

    fn moderation_scenario() -> GenerativeScenario {
        GenerativeScenario::new(vec![
            ScenarioNode::uniform("C1"),
            ScenarioNode::uniform("C2"),
            ScenarioNode::bernoulli("T", vec![], |_| 0.5),
        ])
        .unwrap()
    }

    fn model() -> LinearInteractionModel {
        LinearInteractionModel::new(0.0, BETA, vec![G1, G2], vec![A1, A2])
    }

    fn settings(n: usize, seed: u64) -> PwshapSettings {
        PwshapSettings {
            n_draws: n,
            seed,
            ..PwshapSettings::default()
        }
    }

    #[test]
    fn full_coalition_psi_is_the_cate_closed_form() {
        let dag = moderation_dag();
        let scenario = moderation_scenario();
        let m = model();
        let explainer = PwshapExplainer {
            dag: &dag,
            model: &m,
            sampler: &scenario,
            propensity: None,
        };
        let x = [0.25, 0.5, 1.0];
        let (effect, _) = explainer
            .coalition_effect(Coalition::full(2), &x, &settings(50, 1))
            .unwrap();
        // Conditioning on everything makes the value exact.
        assert_abs_diff_eq!(effect.psi.mean, BETA + A1 * 0.25 + A2 * 0.5, epsilon = 1e-12);
        assert_eq!(effect.psi.se, 0.0);
        assert_eq!(effect.interpretation, "CATE");
    }

    #[test]
    fn partial_coalition_matches_closed_form_statistically() {
        let dag = moderation_dag();
        let scenario = moderation_scenario();
        let m = model();
        let explainer = PwshapExplainer {
            dag: &dag,
            model: &m,
            sampler: &scenario,
            propensity: None,
        };
        let x = [0.25, 0.5, 1.0];
        // S = {C1}: Psi = beta + a1 c1 + a2 / 2.
        let (effect, _) = explainer
            .coalition_effect(Coalition::from_members(&[0], 2), &x, &settings(40_000, 2))
            .unwrap();
        let truth = BETA + A1 * 0.25 + A2 * 0.5;
        assert!(
            (effect.psi.mean - truth).abs() < 5.0 * effect.psi.se,
            "{} vs {truth} (se {})",
            effect.psi.mean,
            effect.psi.se
        );
        // Randomized treatment: weight is t - 1/2.
        assert_abs_diff_eq!(effect.weight.value, 0.5, epsilon = 0.02);
        assert_eq!(effect.interpretation, "'CATE'");
    }

    #[test]
    fn phi_identity_is_exact_by_construction() {
        let dag = moderation_dag();
        let scenario = moderation_scenario();
        let m = model();
        let explainer = PwshapExplainer {
            dag: &dag,
            model: &m,
            sampler: &scenario,
            propensity: None,
        };
        let x = [0.8, 0.1, 0.0];
        for mask in 0u32..4 {
            let (effect, _) = explainer
                .coalition_effect(Coalition { mask, m: 2 }, &x, &settings(2000, 3))
                .unwrap();
            assert_eq!(
                effect.phi.mean.to_bits(),
                (effect.weight.value * effect.psi.mean).to_bits()
            );
        }
    }

    #[test]
    fn path_effects_recover_moderation_closed_form() {
        let dag = moderation_dag();
        let scenario = moderation_scenario();
        let m = model();
        let explainer = PwshapExplainer {
            dag: &dag,
            model: &m,
            sampler: &scenario,
            propensity: None,
        };
        let x = [0.25, 0.5, 1.0];
        let report = explainer.explain(&x, &settings(40_000, 4)).unwrap();
        // Psi_C1 = a1 (c1 - 1/2), Psi_C2 = a2 (c2 - 1/2), direct = full CATE.
        for p in &report.paths {
            let truth = match p.path.as_str() {
                "direct" => BETA + A1 * 0.25 + A2 * 0.5,
                "C1" => A1 * (0.25 - 0.5),
                "C2" => A2 * (0.5 - 0.5),
                other => panic!("unexpected path {other}"),
            };
            assert!(
                (p.delta.mean - truth).abs() < 5.0 * p.delta.se.max(1e-6),
                "path {}: {} vs {truth} (se {})",
                p.path,
                p.delta.mean,
                p.delta.se
            );
        }
        assert_eq!(report.paths[0].role, PathRole::Direct);
    }

    #[test]
    fn alternative_variant_agrees_on_independent_covariates() {
        // With mutually independent covariates both variants share the same
        // closed form, e.g. Psi_C1 = a1 (c1 - 1/2).
        let dag = moderation_dag();
        let scenario = moderation_scenario();
        let m = model();
        let explainer = PwshapExplainer {
            dag: &dag,
            model: &m,
            sampler: &scenario,
            propensity: None,
        };
        let x = [0.9, 0.3, 1.0];
        let mut s = settings(40_000, 5);
        s.variant = PathVariant::Alternative;
        let report = explainer.explain(&x, &s).unwrap();
        let c1 = report.paths.iter().find(|p| p.path == "C1").unwrap();
        let truth = A1 * (0.9 - 0.5);
        assert!(
            (c1.delta.mean - truth).abs() < 5.0 * c1.delta.se,
            "{} vs {truth}",
            c1.delta.mean
        );
    }

    #[test]
    fn division_route_agrees_with_direct_route() {
        let dag = moderation_dag();
        let scenario = moderation_scenario();
        let m = model();
        let prop = FnPropensity {
            f: |_: &[f64]| 0.5,
            clip_epsilon: 0.01,
        };
        let explainer = PwshapExplainer {
            dag: &dag,
            model: &m,
            sampler: &scenario,
            propensity: Some(&prop),
        };
        let x = [0.25, 0.5, 1.0];
        let (effect, warnings) = explainer
            .coalition_effect(Coalition::from_members(&[0], 2), &x, &settings(40_000, 6))
            .unwrap();
        let div = effect.psi_division.unwrap();
        assert!(
            (div.mean - effect.psi.mean).abs()
                < 5.0 * (div.se * div.se + effect.psi.se * effect.psi.se).sqrt(),
            "{} vs {}",
            div.mean,
            effect.psi.mean
        );
        assert!(warnings.is_empty(), "{warnings:?}");
        assert_eq!(effect.weight.source, "fitted_marginalized");
    }

    #[test]
    fn strict_overlap_errors_and_clip_proceeds() {
        let dag = moderation_dag();
        let scenario = moderation_scenario();
        let m = model();
        // Propensity glued to the observed arm t = 1.
        let prop = FnPropensity {
            f: |_: &[f64]| 0.995,
            clip_epsilon: 0.01,
        };
        let explainer = PwshapExplainer {
            dag: &dag,
            model: &m,
            sampler: &scenario,
            propensity: Some(&prop),
        };
        let x = [0.25, 0.5, 1.0];
        let mut strict = settings(200, 7);
        strict.overlap = OverlapPolicy::Strict;
        let err = explainer
            .coalition_effect(Coalition::full(2), &x, &strict)
            .unwrap_err();
        assert!(matches!(err, Error::NearZeroWeight { .. }), "{err}");

        let clip = settings(200, 7);
        let (effect, _) = explainer
            .coalition_effect(Coalition::full(2), &x, &clip)
            .unwrap();
        assert!(effect.weight.clipped);
        assert_abs_diff_eq!(effect.weight.value, 1.0 - 0.99, epsilon = 1e-12);
    }

    #[test]
    fn report_serializes_and_round_trips() {
        let dag = moderation_dag();
        let scenario = moderation_scenario();
        let m = model();
        let explainer = PwshapExplainer {
            dag: &dag,
            model: &m,
            sampler: &scenario,
            propensity: None,
        };
        let report = explainer.explain(&[0.25, 0.5, 1.0], &settings(500, 8)).unwrap();
        let json = report.to_json().unwrap();
        let back = PwshapReport::from_json(&json).unwrap();
        assert_eq!(back.paths.len(), report.paths.len());
        assert_eq!(back.version, REPORT_VERSION);
        let csv = report.summary_csv();
        assert!(csv.starts_with("path,role,psi,se,weight,method\n"));
        assert!(csv.contains("direct,"));
        assert!(csv.contains("standard/on_manifold"));
    }

    #[test]
    fn non_binary_treatment_in_instance_is_rejected() {
        let dag = moderation_dag();
        let scenario = moderation_scenario();
        let m = model();
        let explainer = PwshapExplainer {
            dag: &dag,
            model: &m,
            sampler: &scenario,
            propensity: None,
        };
        let err = explainer.explain(&[0.2, 0.3, 0.5], &settings(10, 9)).unwrap_err();
        assert!(matches!(err, Error::NonBinaryTreatment { .. }));
    }

    #[test]
    fn integration_of_path_effect_is_zero_for_moderation() {
        // E_{C1}[Psi_C1] = a1 E[C1 - 1/2] = 0.
        let scenario = moderation_scenario();
        let est = expectation_over_instances(&scenario, 3000, 10, |row, _| {
            Ok(A1 * (row[0] - 0.5))
        })
        .unwrap();
        assert!(est.mean.abs() < 4.0 * est.se, "{} (se {})", est.mean, est.se);
    }

    #[test]
    fn perturbation_bounds_have_the_stated_shape() {
        assert_eq!(phi_perturbation_bound(0.1), 0.2);
        assert_eq!(path_perturbation_bound(0.1), 0.4);
        assert_abs_diff_eq!(
            division_route_bound(0.1, 0.05, 0.2, 3.0),
            4.0 * 0.1 / 0.2 + 4.0 * 3.0 * 0.05 / 0.04,
            epsilon = 1e-12
        );
    }
}
