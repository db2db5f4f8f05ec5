//! Coalition value functions and exact-enumeration Shapley values.
//!
//! Features are the sampler columns (covariates in DAG order, treatment
//! last). A coalition is a bitmask of columns fixed at the explained
//! instance's values; the remaining columns are drawn from the reference
//! sampler. Values for all 2^m coalitions are estimated once (in parallel,
//! with per-coalition derived seeds so results are independent of thread
//! count) and shared across every attribution that consumes them — which
//! makes the efficiency identity sum(phi) = v(full) - v(empty) hold exactly
//! rather than just in expectation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PredictiveModel;
use crate::rng::derive_seed;
use crate::sampler::ReferenceSampler;

/// How absent features are integrated out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMode {
    /// Conditional on the coalition: stays on the data manifold.
    OnManifold,
    /// Marginal reference: breaks the dependence between present and absent
    /// features (interventional in the flat sense).
    OffManifold,
    /// do-intervention on the coalition under the causal graph.
    Causal,
}

/// A subset of feature columns, stored as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coalition {
    pub mask: u32,
    pub m: usize,
}

impl Coalition {
    pub fn empty(m: usize) -> Self {
        Coalition { mask: 0, m }
    }

    pub fn full(m: usize) -> Self {
        Coalition {
            mask: (1u32 << m) - 1,
            m,
        }
    }

    pub fn from_members(members: &[usize], m: usize) -> Self {
        let mut mask = 0;
        for &i in members {
            assert!(i < m);
            mask |= 1 << i;
        }
        Coalition { mask, m }
    }

    pub fn contains(&self, i: usize) -> bool {
        self.mask & (1 << i) != 0
    }

    pub fn with(&self, i: usize) -> Self {
        Coalition {
            mask: self.mask | (1 << i),
            m: self.m,
        }
    }

    pub fn without(&self, i: usize) -> Self {
        Coalition {
            mask: self.mask & !(1 << i),
            m: self.m,
        }
    }

    pub fn size(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn members(&self) -> Vec<usize> {
        (0..self.m).filter(|&i| self.contains(i)).collect()
    }

    pub fn label(&self, names: &[String]) -> String {
        if self.mask == 0 {
            "{}".to_string()
        } else {
            format!("{{{}}}", self.members().iter().map(|&i| names[i].as_str()).collect::<Vec<_>>().join(","))
        }
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ValueEstimate {
    pub mean: f64,
    pub se: f64,
    pub n_draws: usize,
}

impl ValueEstimate {
    pub fn exact(mean: f64) -> Self {
        ValueEstimate {
            mean,
            se: 0.0,
            n_draws: 0,
        }
    }

    pub fn from_draws(draws: &[f64]) -> Self {
        let n = draws.len();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            draws.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n as f64 - 1.0)
        } else {
            0.0
        };
        ValueEstimate {
            mean,
            se: (var / n as f64).sqrt(),
            n_draws: n,
        }
    }

    /// Difference of two estimates from independent draw sets.
    pub fn minus(&self, other: &ValueEstimate) -> ValueEstimate {
        ValueEstimate {
            mean: self.mean - other.mean,
            se: (self.se * self.se + other.se * other.se).sqrt(),
            n_draws: self.n_draws.min(other.n_draws),
        }
    }

    pub fn scale(&self, c: f64) -> ValueEstimate {
        ValueEstimate {
            mean: c * self.mean,
            se: c.abs() * self.se,
            n_draws: self.n_draws,
        }
    }
}

/// Exact-enumeration Shapley weight 1 / (m * C(m-1, s)), evaluated
/// multiplicatively so it stays finite for every m <= 20.
pub fn shapley_weight(m: usize, s: usize) -> f64 {
    debug_assert!(s < m);
    // 1 / (m * C(m-1, s)) = prod_{k=1..s} k / (m - k)  / m  ... computed
    // stepwise to avoid large intermediates.
    let mut w = 1.0 / m as f64;
    for k in 1..=s {
        w *= k as f64 / (m - k) as f64;
    }
    w
}

/// Settings shared by every coalition value estimate for one explanation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ShapleyConfig {
    pub mode: ReferenceMode,
    pub n_draws: usize,
    pub seed: u64,
}

/// Per-draw model evaluations for one coalition, fixed at the instance.
fn coalition_draws(
    model: &dyn PredictiveModel,
    sampler: &dyn ReferenceSampler,
    features: &[f64],
    coalition: Coalition,
    config: &ShapleyConfig,
) -> Result<Vec<f64>> {
    let fixed: Vec<(usize, f64)> = coalition.members().iter().map(|&i| (i, features[i])).collect();
    let seed = derive_seed(config.seed, &format!("value/mask={}", coalition.mask));
    let batch = match config.mode {
        ReferenceMode::OnManifold => sampler.sample_conditional(&fixed, config.n_draws, seed)?,
        ReferenceMode::OffManifold => {
            let mut batch = sampler.sample_marginal(config.n_draws, seed)?;
            for row in &mut batch.rows {
                for &(i, v) in &fixed {
                    row[i] = v;
                }
            }
            batch
        }
        ReferenceMode::Causal => sampler.sample_do(&fixed, config.n_draws, seed)?,
    };
    Ok(batch.rows.iter().map(|r| model.predict(r)).collect())
}

/// v(S) = E[f | coalition S fixed at the instance] under the configured
/// reference mode.
pub fn value_function(
    model: &dyn PredictiveModel,
    sampler: &dyn ReferenceSampler,
    features: &[f64],
    coalition: Coalition,
    config: &ShapleyConfig,
) -> Result<ValueEstimate> {
    Ok(ValueEstimate::from_draws(&coalition_draws(
        model, sampler, features, coalition, config,
    )?))
}

/// Value estimates for every coalition, indexed by bitmask.
pub struct CoalitionValues {
    pub m: usize,
    pub values: Vec<ValueEstimate>,
}

impl CoalitionValues {
    pub fn get(&self, c: Coalition) -> ValueEstimate {
        self.values[c.mask as usize]
    }
}

/// Estimate v(S) for all 2^m coalitions. Parallelised over coalitions; each
/// coalition has its own derived seed, so the result is byte-identical across
/// thread counts.
pub fn all_coalition_values(
    model: &dyn PredictiveModel,
    sampler: &dyn ReferenceSampler,
    features: &[f64],
    config: &ShapleyConfig,
) -> Result<CoalitionValues> {
    let m = features.len();
    if m > 20 {
        return Err(Error::TooManyFeatures { n: m });
    }
    let values: Vec<ValueEstimate> = (0u32..(1u32 << m))
        .into_par_iter()
        .map(|mask| {
            value_function(model, sampler, features, Coalition { mask, m }, config)
        })
        .collect::<Result<_>>()?;
    Ok(CoalitionValues { m, values })
}

/// One feature's Shapley value plus the report around it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapleyReport {
    pub feature_names: Vec<String>,
    pub mode: ReferenceMode,
    pub n_draws: usize,
    pub seed: u64,
    pub phi: Vec<ValueEstimate>,
    pub base_value: ValueEstimate,
    pub full_value: ValueEstimate,
}

/// Exact-enumeration Shapley values for every feature, sharing one table of
/// coalition values.
pub fn full_shapley(
    model: &dyn PredictiveModel,
    sampler: &dyn ReferenceSampler,
    features: &[f64],
    feature_names: &[String],
    config: &ShapleyConfig,
) -> Result<ShapleyReport> {
    let values = all_coalition_values(model, sampler, features, config)?;
    let m = values.m;
    let phi = (0..m)
        .map(|j| shapley_from_values(&values, j))
        .collect();
    Ok(ShapleyReport {
        feature_names: feature_names.to_vec(),
        mode: config.mode,
        n_draws: config.n_draws,
        seed: config.seed,
        phi,
        base_value: values.get(Coalition::empty(m)),
        full_value: values.get(Coalition::full(m)),
    })
}

/// phi_j from a precomputed coalition table. Coalition estimates come from
/// disjoint draw sets, so variances add across terms.
pub fn shapley_from_values(values: &CoalitionValues, j: usize) -> ValueEstimate {
    let m = values.m;
    // Net signed weight on each v(mask): +w for masks containing j (as
    // S u {j}), -w for the matching S.
    let mut mean = 0.0;
    let mut var = 0.0;
    let mut total_weight = 0.0;
    for mask in 0u32..(1u32 << m) {
        let c = Coalition { mask, m };
        if c.contains(j) {
            continue;
        }
        let w = shapley_weight(m, c.size());
        total_weight += w;
        let with = values.get(c.with(j));
        let without = values.get(c);
        mean += w * (with.mean - without.mean);
        var += w * w * (with.se * with.se + without.se * without.se);
    }
    debug_assert!((total_weight - 1.0).abs() < 1e-9, "weights sum to {total_weight}");
    ValueEstimate {
        mean,
        se: var.sqrt(),
        n_draws: values.values.first().map(|v| v.n_draws).unwrap_or(0),
    }
}

/// Causal Shapley direct / indirect decomposition of feature `j` (totals over
/// all coalitions). Requires a sampler with do-support. The three value
/// evaluations per coalition share draw sets so that
/// direct + indirect = v(S u {j}) - v(S) holds exactly per coalition.
pub fn causal_shapley_split(
    model: &dyn PredictiveModel,
    sampler: &dyn ReferenceSampler,
    features: &[f64],
    j: usize,
    config: &ShapleyConfig,
) -> Result<(ValueEstimate, ValueEstimate)> {
    let m = features.len();
    if m > 20 {
        return Err(Error::TooManyFeatures { n: m });
    }
    if !sampler.supports_do() {
        return Err(Error::DoUnsupported);
    }
    let per_coalition: Vec<(f64, ValueEstimate, ValueEstimate)> = (0u32..(1u32 << m))
        .into_par_iter()
        .filter(|mask| mask & (1 << j) == 0)
        .map(|mask| -> Result<(f64, ValueEstimate, ValueEstimate)> {
            let s = Coalition { mask, m };
            let fixed_s: Vec<(usize, f64)> = s.members().iter().map(|&i| (i, features[i])).collect();
            // Same seed tags as `value_function`, so the split shares draw
            // sets with the coalition value table under the causal mode.
            let seed_s = derive_seed(config.seed, &format!("value/mask={}", s.mask));
            let seed_sj = derive_seed(config.seed, &format!("value/mask={}", s.with(j).mask));
            // One draw set under do(X_S = x_S)...
            let rows_s = sampler.sample_do(&fixed_s, config.n_draws, seed_s)?.rows;
            // ... evaluated with and without x_j substituted in:
            let mut mixed_draws = Vec::with_capacity(rows_s.len());
            let mut base_draws = Vec::with_capacity(rows_s.len());
            for row in &rows_s {
                base_draws.push(model.predict(row));
                let mut with_j = row.clone();
                with_j[j] = features[j];
                mixed_draws.push(model.predict(&with_j));
            }
            // ... and one draw set under do(X_{S u j}).
            let mut fixed_sj = fixed_s.clone();
            fixed_sj.push((j, features[j]));
            let rows_sj = sampler.sample_do(&fixed_sj, config.n_draws, seed_sj)?.rows;
            let v_sj = ValueEstimate::from_draws(
                &rows_sj.iter().map(|r| model.predict(r)).collect::<Vec<_>>(),
            );
            // Direct: same draws on both sides, so difference per draw.
            let direct = ValueEstimate::from_draws(
                &mixed_draws
                    .iter()
                    .zip(&base_draws)
                    .map(|(a, b)| a - b)
                    .collect::<Vec<_>>(),
            );
            let indirect = v_sj.minus(&ValueEstimate::from_draws(&mixed_draws));
            let w = shapley_weight(m, s.size());
            Ok((w, direct, indirect))
        })
        .collect::<Result<_>>()?;
    let mut direct = ValueEstimate::exact(0.0);
    let mut indirect = ValueEstimate::exact(0.0);
    let mut dvar = 0.0;
    let mut ivar = 0.0;
    for (w, d, i) in per_coalition {
        direct.mean += w * d.mean;
        indirect.mean += w * i.mean;
        dvar += w * w * d.se * d.se;
        ivar += w * w * i.se * i.se;
        direct.n_draws = d.n_draws;
        indirect.n_draws = i.n_draws;
    }
    direct.se = dvar.sqrt();
    indirect.se = ivar.sqrt();
    Ok((direct, indirect))
}
