//! Black-box model contract and the built-in reference models.
//!
//! Everything downstream only sees [`PredictiveModel`] / [`PropensityModel`],
//! so explanations work for any `f: features -> score`. The built-ins cover
//! what the synthetic studies need: a linear model with treatment interaction
//! terms, ordinary least squares over polynomial features, and a logistic
//! regression fitted by iteratively reweighted least squares.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A deterministic black-box predictor over feature vectors laid out as
/// covariates (in DAG order) followed by the treatment.
pub trait PredictiveModel: Sync {
    fn predict(&self, features: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64 + Sync> PredictiveModel for F {
    fn predict(&self, features: &[f64]) -> f64 {
        self(features)
    }
}

/// A model of p(T=1 | conditioned covariates). The raw probability is always
/// available; `propensity` applies the configured overlap clipping.
pub trait PropensityModel: Sync {
    fn propensity_raw(&self, covariates: &[f64]) -> f64;
    fn clip_epsilon(&self) -> f64;

    fn propensity(&self, covariates: &[f64]) -> f64 {
        clip_propensity(self.propensity_raw(covariates), self.clip_epsilon())
    }
}

/// Clamp a probability into [eps, 1-eps].
pub fn clip_propensity(p: f64, eps: f64) -> f64 {
    p.clamp(eps, 1.0 - eps)
}

/// f(c, t) = intercept + beta_t * t + sum_i gamma_i c_i + sum_i alpha_i t c_i.
///
/// This is the canonical outcome form of the synthetic studies; it is also
/// the model for which the sup-norm bound needed by the propensity
/// error-bound analysis is exact (multilinear functions attain their extrema
/// at box vertices).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearInteractionModel {
    pub intercept: f64,
    pub beta_t: f64,
    pub gamma: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl LinearInteractionModel {
    pub fn new(intercept: f64, beta_t: f64, gamma: Vec<f64>, alpha: Vec<f64>) -> Self {
        assert_eq!(gamma.len(), alpha.len());
        LinearInteractionModel {
            intercept,
            beta_t,
            gamma,
            alpha,
        }
    }

    pub fn n_covariates(&self) -> usize {
        self.gamma.len()
    }

    /// Exact sup norm of |f| over the axis-aligned box `domain`, given as
    /// (low, high) per covariate plus the treatment in {0, 1}.
    pub fn sup_norm_bound(&self, domain: &[(f64, f64)]) -> Result<f64> {
        let m = self.n_covariates();
        if domain.len() != m {
            return Err(Error::InvalidArgument(format!(
                "domain box has {} coordinates, model has {m} covariates",
                domain.len()
            )));
        }
        if m > 20 {
            return Err(Error::TooManyFeatures { n: m });
        }
        let mut best: f64 = 0.0;
        for t in [0.0, 1.0] {
            for mask in 0u32..(1u32 << m) {
                let mut v = self.intercept + self.beta_t * t;
                for i in 0..m {
                    let c = if mask & (1 << i) != 0 {
                        domain[i].1
                    } else {
                        domain[i].0
                    };
                    v += (self.gamma[i] + self.alpha[i] * t) * c;
                }
                best = best.max(v.abs());
            }
        }
        Ok(best)
    }
}

impl PredictiveModel for LinearInteractionModel {
    fn predict(&self, features: &[f64]) -> f64 {
        let m = self.n_covariates();
        debug_assert_eq!(features.len(), m + 1);
        let t = features[m];
        let mut v = self.intercept + self.beta_t * t;
        for i in 0..m {
            v += (self.gamma[i] + self.alpha[i] * t) * features[i];
        }
        v
    }
}

/// Expand raw features into polynomial terms up to `degree` (with all
/// cross products; degree 0 term included as the leading 1).
pub fn polynomial_terms(features: &[f64], degree: usize) -> Vec<f64> {
    let mut terms = vec![1.0];
    let mut prev_block: Vec<(usize, f64)> = vec![(0, 1.0)]; // (first usable index, value)
    for _ in 0..degree {
        let mut next = Vec::new();
        for &(start, value) in &prev_block {
            for (j, &x) in features.iter().enumerate().skip(start) {
                next.push((j, value * x));
            }
        }
        terms.extend(next.iter().map(|&(_, v)| v));
        prev_block = next;
    }
    terms
}

/// A linear model over a polynomial expansion of the raw features.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolynomialModel {
    pub degree: usize,
    pub coefficients: Vec<f64>,
}

impl PredictiveModel for PolynomialModel {
    fn predict(&self, features: &[f64]) -> f64 {
        polynomial_terms(features, self.degree)
            .iter()
            .zip(&self.coefficients)
            .map(|(x, c)| x * c)
            .sum()
    }
}

/// Fit a least-squares linear model over `degree`-order polynomial features.
/// Falls back to a tiny ridge penalty when the normal equations are singular.
pub fn fit_linear(rows: &[Vec<f64>], y: &[f64], degree: usize) -> Result<PolynomialModel> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("cannot fit on empty data".into()));
    }
    if rows.len() != y.len() {
        return Err(Error::Schema(format!(
            "design has {} rows but target has {}",
            rows.len(),
            y.len()
        )));
    }
    let expanded: Vec<Vec<f64>> = rows.iter().map(|r| polynomial_terms(r, degree)).collect();
    let p = expanded[0].len();
    let n = expanded.len();
    let x = DMatrix::from_fn(n, p, |i, j| expanded[i][j]);
    let yv = DVector::from_column_slice(y);
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * yv;
    let solve = |xtx: DMatrix<f64>| xtx.cholesky().map(|ch| ch.solve(&xty));
    let coef = match solve(xtx.clone()) {
        Some(c) => c,
        None => {
            let ridge = &xtx + DMatrix::identity(p, p) * 1e-8;
            solve(ridge).ok_or_else(|| {
                Error::SingularDesign(format!(
                    "normal equations singular even with ridge fallback (p = {p})"
                ))
            })?
        }
    };
    Ok(PolynomialModel {
        degree,
        coefficients: coef.iter().copied().collect(),
    })
}

/// Logistic regression p(y=1|x) = sigmoid(b0 + b . x).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogisticModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    #[serde(default = "default_clip")]
    pub clip_epsilon: f64,
    /// Names for the coefficient slots, used in diagnostics.
    pub feature_names: Vec<String>,
}

fn default_clip() -> f64 {
    0.01
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticModel {
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let z = self.intercept
            + self
                .coefficients
                .iter()
                .zip(x)
                .map(|(b, v)| b * v)
                .sum::<f64>();
        sigmoid(z)
    }

    pub fn with_clip(mut self, eps: f64) -> Self {
        self.clip_epsilon = eps;
        self
    }
}

impl PredictiveModel for LogisticModel {
    /// Used as an outcome model for binary outcomes: predicts the
    /// success probability (unclipped).
    fn predict(&self, features: &[f64]) -> f64 {
        self.predict_proba(features)
    }
}

impl PropensityModel for LogisticModel {
    fn propensity_raw(&self, covariates: &[f64]) -> f64 {
        self.predict_proba(covariates)
    }

    fn clip_epsilon(&self) -> f64 {
        self.clip_epsilon
    }
}

/// A fixed propensity function with clipping, for closed-form scenarios.
pub struct FnPropensity<F: Fn(&[f64]) -> f64 + Sync> {
    pub f: F,
    pub clip_epsilon: f64,
}

impl<F: Fn(&[f64]) -> f64 + Sync> PropensityModel for FnPropensity<F> {
    fn propensity_raw(&self, covariates: &[f64]) -> f64 {
        (self.f)(covariates)
    }

    fn clip_epsilon(&self) -> f64 {
        self.clip_epsilon
    }
}

fn log_likelihood(rows: &[Vec<f64>], y: &[f64], intercept: f64, coef: &[f64]) -> f64 {
    rows.iter()
        .zip(y)
        .map(|(x, &yi)| {
            let z = intercept + coef.iter().zip(x).map(|(b, v)| b * v).sum::<f64>();
            // log p(y|z) in a numerically stable form: -log(1+exp(-s*z))
            let s = if yi > 0.5 { z } else { -z };
            if s > 0.0 {
                -(-s).exp().ln_1p()
            } else {
                s - s.exp().ln_1p()
            }
        })
        .sum()
}

/// Fit logistic regression by IRLS (Newton steps with step halving so the
/// log-likelihood never decreases). Errors on perfect separation, naming the
/// runaway feature.
pub fn fit_logistic(rows: &[Vec<f64>], y: &[f64], names: &[String]) -> Result<LogisticModel> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("cannot fit on empty data".into()));
    }
    if rows.len() != y.len() {
        return Err(Error::Schema(format!(
            "design has {} rows but target has {}",
            rows.len(),
            y.len()
        )));
    }
    for &yi in y {
        if yi != 0.0 && yi != 1.0 {
            return Err(Error::InvalidArgument(format!(
                "logistic target must be binary, found {yi}"
            )));
        }
    }
    let n = rows.len();
    let d = rows[0].len();
    let p = d + 1; // intercept first
    let x = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { rows[i][j - 1] });
    let yv = DVector::from_column_slice(y);
    let mut beta = DVector::zeros(p);
    let mut ll = log_likelihood(rows, y, 0.0, &vec![0.0; d]);

    const MAX_ITER: usize = 100;
    const TOL: f64 = 1e-8;
    // Signed margin beyond which every point is fitted with probability
    // ~1 - 1e-5: the likelihood is saturating and the MLE does not exist.
    const SEPARATION_MARGIN: f64 = 12.0;

    for _ in 0..MAX_ITER {
        let eta = &x * &beta;
        let mu = eta.map(sigmoid);
        let w = mu.map(|m| (m * (1.0 - m)).max(1e-12));
        // X^T W X and X^T (y - mu)
        let mut xtwx = DMatrix::zeros(p, p);
        for i in 0..n {
            let row = x.row(i);
            for a in 0..p {
                for b in a..p {
                    let v = w[i] * row[a] * row[b];
                    xtwx[(a, b)] += v;
                    if a != b {
                        xtwx[(b, a)] += v;
                    }
                }
            }
        }
        let grad = x.transpose() * (&yv - &mu);
        let step = xtwx
            .cholesky()
            .map(|ch| ch.solve(&grad))
            .ok_or_else(|| Error::SingularDesign("IRLS weighted normal equations".into()))?;

        // Step halving: accept the largest fraction of the Newton step that
        // does not decrease the log-likelihood.
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = &beta + &step * scale;
            let cand_ll = log_likelihood(rows, y, cand[0], cand.as_slice()[1..].as_ref());
            if cand_ll >= ll - 1e-12 {
                let delta = (&cand - &beta).amax();
                beta = cand;
                ll = cand_ll;
                accepted = true;
                if delta < TOL {
                    return Ok(finish(beta, names));
                }
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            return Ok(finish(beta, names));
        }
        let eta_new = &x * &beta;
        let separated = (0..n).all(|i| {
            let margin = if y[i] > 0.5 { eta_new[i] } else { -eta_new[i] };
            margin > SEPARATION_MARGIN
        });
        if separated {
            let (worst, _) = beta
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .unwrap();
            let name = if worst == 0 {
                "intercept".to_string()
            } else {
                names
                    .get(worst - 1)
                    .cloned()
                    .unwrap_or_else(|| format!("x{}", worst - 1))
            };
            return Err(Error::ConvergenceFailure(format!(
                "data are perfectly separated, the MLE does not exist; largest coefficient is {name}"
            )));
        }
    }
    Err(Error::ConvergenceFailure(format!(
        "IRLS did not converge in {MAX_ITER} iterations"
    )))
}

fn finish(beta: DVector<f64>, names: &[String]) -> LogisticModel {
    LogisticModel {
        intercept: beta[0],
        coefficients: beta.as_slice()[1..].to_vec(),
        clip_epsilon: default_clip(),
        feature_names: names.to_vec(),
    }
}
