//! Reference distributions for coalition value functions.
//!
//! Every backend answers the same question: given values for a subset of the
//! columns (covariates in DAG order, treatment last), draw the remaining
//! columns from a reference law. Three backends are provided:
//!
//! - the exact backend wraps a [`GenerativeScenario`] and is the only one
//!   that also supports do-interventions;
//! - [`LinearChainImputer`] fits one linear model per column on training data
//!   and resamples unknown columns in Gibbs-style sweeps;
//! - [`EmpiricalKnnSampler`] resamples rows among the nearest training
//!   neighbours in the conditioned coordinates.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::PredictiveModel;
use crate::rng::{rng_from_seed, standard_normal};
use crate::scenario::GenerativeScenario;

/// Rows drawn from a reference law, plus an optional data-quality warning
/// (e.g. conditioning outside the training support).
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub rows: Vec<Vec<f64>>,
    pub warning: Option<String>,
}

impl SampleBatch {
    pub fn plain(rows: Vec<Vec<f64>>) -> Self {
        SampleBatch {
            rows,
            warning: None,
        }
    }
}

/// Conditional reference distribution over the sampler columns.
pub trait ReferenceSampler: Sync {
    fn n_columns(&self) -> usize;

    /// Draw `n` full rows given fixed (column, value) pairs.
    fn sample_conditional(&self, known: &[(usize, f64)], n: usize, seed: u64)
        -> Result<SampleBatch>;

    fn sample_marginal(&self, n: usize, seed: u64) -> Result<SampleBatch> {
        self.sample_conditional(&[], n, seed)
    }

    /// Whether interventional (do) sampling is available.
    fn supports_do(&self) -> bool {
        false
    }

    /// Draw from the interventional law with the given nodes clamped.
    fn sample_do(&self, _interventions: &[(usize, f64)], _n: usize, _seed: u64)
        -> Result<SampleBatch> {
        Err(Error::DoUnsupported)
    }
}

impl ReferenceSampler for GenerativeScenario {
    fn n_columns(&self) -> usize {
        self.n_columns()
    }

    fn sample_conditional(&self, known: &[(usize, f64)], n: usize, seed: u64)
        -> Result<SampleBatch> {
        Ok(SampleBatch::plain(GenerativeScenario::sample_conditional(
            self, known, n, seed,
        )?))
    }

    fn sample_marginal(&self, n: usize, seed: u64) -> Result<SampleBatch> {
        Ok(SampleBatch::plain(GenerativeScenario::sample_marginal(
            self, n, seed,
        )))
    }

    fn supports_do(&self) -> bool {
        true
    }

    fn sample_do(&self, interventions: &[(usize, f64)], n: usize, seed: u64)
        -> Result<SampleBatch> {
        Ok(SampleBatch::plain(GenerativeScenario::sample_do(
            self,
            interventions,
            n,
            seed,
        )))
    }
}

/// One linear model per column, fitted against all other columns.
struct ColumnModel {
    /// Intercept followed by one coefficient per other column (in column
    /// order, skipping the modelled column itself).
    coef: Vec<f64>,
    residual_sd: f64,
    /// Columns whose training values are all in {0, 1} are resampled as
    /// Bernoulli draws of the clamped linear prediction.
    binary: bool,
}

/// Chained-equations imputer: each column is modelled linearly from the
/// others; conditional sampling runs Gibbs-style sweeps over the unknown
/// columns. Rows with nothing unknown are returned unchanged.
pub struct LinearChainImputer {
    models: Vec<ColumnModel>,
    train: Vec<Vec<f64>>,
    mins: Vec<f64>,
    maxs: Vec<f64>,
    pub sweeps: usize,
}

impl LinearChainImputer {
    pub fn fit(train: &[Vec<f64>]) -> Result<Self> {
        if train.len() < 3 {
            return Err(Error::InvalidArgument(
                "imputer needs at least 3 training rows".into(),
            ));
        }
        let m = train[0].len();
        let mut models = Vec::with_capacity(m);
        for j in 0..m {
            let rows: Vec<Vec<f64>> = train
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|(k, _)| *k != j)
                        .map(|(_, &v)| v)
                        .collect()
                })
                .collect();
            let y: Vec<f64> = train.iter().map(|r| r[j]).collect();
            let binary = y.iter().all(|&v| v == 0.0 || v == 1.0);
            let fitted = crate::model::fit_linear(&rows, &y, 1)?;
            let preds: Vec<f64> = rows.iter().map(|r| fitted.predict(r)).collect();
            let sse: f64 = preds.iter().zip(&y).map(|(p, v)| (v - p) * (v - p)).sum();
            let dof = (train.len().saturating_sub(m)).max(1) as f64;
            models.push(ColumnModel {
                coef: fitted.coefficients,
                residual_sd: (sse / dof).sqrt(),
                binary,
            });
        }
        let mins = (0..m)
            .map(|j| train.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min))
            .collect();
        let maxs = (0..m)
            .map(|j| train.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        Ok(LinearChainImputer {
            models,
            train: train.to_vec(),
            mins,
            maxs,
            sweeps: 10,
        })
    }

    fn redraw_column<R: Rng>(&self, j: usize, row: &[f64], rng: &mut R) -> f64 {
        let model = &self.models[j];
        let mut pred = model.coef[0];
        let mut k = 1;
        for (c, &v) in row.iter().enumerate() {
            if c != j {
                pred += model.coef[k] * v;
                k += 1;
            }
        }
        if model.binary {
            f64::from(rng.gen_bool(pred.clamp(0.0, 1.0)))
        } else {
            pred + model.residual_sd * standard_normal(rng)
        }
    }
}

impl ReferenceSampler for LinearChainImputer {
    fn n_columns(&self) -> usize {
        self.models.len()
    }

    fn sample_conditional(&self, known: &[(usize, f64)], n: usize, seed: u64)
        -> Result<SampleBatch> {
        let m = self.n_columns();
        let mut fixed: Vec<Option<f64>> = vec![None; m];
        for &(i, v) in known {
            if i >= m {
                return Err(Error::InvalidArgument(format!(
                    "column index {i} out of range (m = {m})"
                )));
            }
            fixed[i] = Some(v);
        }
        let unknown: Vec<usize> = (0..m).filter(|&i| fixed[i].is_none()).collect();
        let warning = known
            .iter()
            .find(|&&(i, v)| v < self.mins[i] - 1e-9 || v > self.maxs[i] + 1e-9)
            .map(|&(i, v)| {
                format!("conditioning value {v} for column {i} lies outside the training support")
            });
        if unknown.is_empty() {
            let row: Vec<f64> = fixed.iter().map(|v| v.unwrap()).collect();
            return Ok(SampleBatch {
                rows: vec![row; n],
                warning,
            });
        }
        let mut rng = rng_from_seed(seed);
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            // Warm start from a random training row, then sweep.
            let start = &self.train[rng.gen_range(0..self.train.len())];
            let mut row: Vec<f64> = (0..m)
                .map(|i| fixed[i].unwrap_or(start[i]))
                .collect();
            for _ in 0..self.sweeps {
                for &j in &unknown {
                    row[j] = self.redraw_column(j, &row, &mut rng);
                }
            }
            rows.push(row);
        }
        Ok(SampleBatch { rows, warning })
    }

    fn sample_marginal(&self, n: usize, seed: u64) -> Result<SampleBatch> {
        // Empirical marginal: bootstrap the training rows.
        let mut rng = rng_from_seed(seed);
        let rows = (0..n)
            .map(|_| self.train[rng.gen_range(0..self.train.len())].clone())
            .collect();
        Ok(SampleBatch::plain(rows))
    }
}

/// Conditional sampling by resampling among the k nearest training rows in
/// the conditioned coordinates (standardized Euclidean distance), with the
/// conditioned coordinates then overwritten by their fixed values.
pub struct EmpiricalKnnSampler {
    train: Vec<Vec<f64>>,
    means: Vec<f64>,
    sds: Vec<f64>,
    pub k: usize,
}

impl EmpiricalKnnSampler {
    pub fn fit(train: &[Vec<f64>]) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::InvalidArgument("kNN sampler needs training rows".into()));
        }
        let m = train[0].len();
        let n = train.len() as f64;
        let means: Vec<f64> = (0..m)
            .map(|j| train.iter().map(|r| r[j]).sum::<f64>() / n)
            .collect();
        let sds: Vec<f64> = (0..m)
            .map(|j| {
                let v = train
                    .iter()
                    .map(|r| (r[j] - means[j]).powi(2))
                    .sum::<f64>()
                    / n;
                v.sqrt().max(1e-12)
            })
            .collect();
        Ok(EmpiricalKnnSampler {
            train: train.to_vec(),
            means,
            sds,
            k: (n.sqrt().ceil() as usize).max(1),
        })
    }
}

impl ReferenceSampler for EmpiricalKnnSampler {
    fn n_columns(&self) -> usize {
        self.means.len()
    }

    fn sample_conditional(&self, known: &[(usize, f64)], n: usize, seed: u64)
        -> Result<SampleBatch> {
        let mut rng = rng_from_seed(seed);
        if known.is_empty() {
            let rows = (0..n)
                .map(|_| self.train[rng.gen_range(0..self.train.len())].clone())
                .collect();
            return Ok(SampleBatch::plain(rows));
        }
        let mut dist: Vec<(f64, usize)> = self
            .train
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let d: f64 = known
                    .iter()
                    .map(|&(j, v)| ((r[j] - v) / self.sds[j]).powi(2))
                    .sum();
                (d, i)
            })
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let k = self.k.min(dist.len());
        let rows = (0..n)
            .map(|_| {
                let pick = dist[rng.gen_range(0..k)].1;
                let mut row = self.train[pick].clone();
                for &(j, v) in known {
                    row[j] = v;
                }
                row
            })
            .collect();
        Ok(SampleBatch::plain(rows))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{GenerativeScenario, ScenarioNode};
    use approx::assert_abs_diff_eq;

    fn col_mean(rows: &[Vec<f64>], j: usize) -> f64 {
        rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64
    }

    /// Linear-Gaussian pair: X ~ mean 0 sd 1; Z = 0.8 X + noise(sd 0.6).
    fn correlated_training(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = rng_from_seed(seed);
        (0..n)
            .map(|_| {
                let x = standard_normal(&mut rng);
                let z = 0.8 * x + 0.6 * standard_normal(&mut rng);
                vec![x, z]
            })
            .collect()
    }

    #[test]
    fn imputer_matches_linear_gaussian_conditionals() {
        let train = correlated_training(4000, 1);
        let imp = LinearChainImputer::fit(&train).unwrap();
        // E[Z | X = 1.5] = 1.2
        let batch = imp.sample_conditional(&[(0, 1.5)], 8000, 2).unwrap();
        assert_abs_diff_eq!(col_mean(&batch.rows, 1), 1.2, epsilon = 0.07);
        assert!(batch.rows.iter().all(|r| r[0] == 1.5));
    }

    #[test]
    fn imputer_handles_binary_columns() {
        let scenario = GenerativeScenario::new(vec![
            ScenarioNode::uniform("C"),
            ScenarioNode::bernoulli("T", vec![0], |p| p[0]),
        ])
        .unwrap();
        let train = scenario.sample_marginal(4000, 3);
        let imp = LinearChainImputer::fit(&train).unwrap();
        let batch = imp.sample_conditional(&[(0, 0.9)], 8000, 4).unwrap();
        // p(T=1 | C = 0.9) = 0.9; every draw must stay in {0, 1}.
        assert!(batch.rows.iter().all(|r| r[1] == 0.0 || r[1] == 1.0));
        assert_abs_diff_eq!(col_mean(&batch.rows, 1), 0.9, epsilon = 0.04);
    }

    #[test]
    fn imputer_returns_fully_observed_rows_unchanged() {
        let train = correlated_training(100, 5);
        let imp = LinearChainImputer::fit(&train).unwrap();
        let batch = imp.sample_conditional(&[(0, 0.3), (1, -0.2)], 7, 6).unwrap();
        assert_eq!(batch.rows, vec![vec![0.3, -0.2]; 7]);
    }

    #[test]
    fn imputer_warns_outside_training_support() {
        let train = correlated_training(200, 7);
        let imp = LinearChainImputer::fit(&train).unwrap();
        let batch = imp.sample_conditional(&[(0, 100.0)], 5, 8).unwrap();
        assert!(batch.warning.is_some());
    }

    #[test]
    fn knn_conditional_tracks_local_law() {
        let train = correlated_training(4000, 9);
        let knn = EmpiricalKnnSampler::fit(&train).unwrap();
        assert_eq!(knn.k, 64); // ceil(sqrt(4000)) = 64
        let batch = knn.sample_conditional(&[(0, 1.5)], 8000, 10).unwrap();
        assert_abs_diff_eq!(col_mean(&batch.rows, 1), 1.2, epsilon = 0.15);
        assert!(batch.rows.iter().all(|r| r[0] == 1.5));
    }

    #[test]
    fn samplers_are_deterministic_in_the_seed() {
        let train = correlated_training(500, 11);
        let imp = LinearChainImputer::fit(&train).unwrap();
        let knn = EmpiricalKnnSampler::fit(&train).unwrap();
        for sampler in [&imp as &dyn ReferenceSampler, &knn] {
            let a = sampler.sample_conditional(&[(0, 0.4)], 20, 12).unwrap();
            let b = sampler.sample_conditional(&[(0, 0.4)], 20, 12).unwrap();
            assert_eq!(a.rows, b.rows);
        }
    }

    #[test]
    fn do_support_is_exact_backend_only() {
        let train = correlated_training(100, 13);
        let imp = LinearChainImputer::fit(&train).unwrap();
        assert!(!ReferenceSampler::supports_do(&imp));
        assert!(matches!(
            imp.sample_do(&[(0, 1.0)], 5, 14),
            Err(Error::DoUnsupported)
        ));
        let scenario = GenerativeScenario::new(vec![ScenarioNode::uniform("U")]).unwrap();
        assert!(ReferenceSampler::supports_do(&scenario));
    }
}
