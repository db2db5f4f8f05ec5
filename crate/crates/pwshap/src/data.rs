//! Tabular dataset handling: CSV ingestion aligned against a causal DAG,
//! with treatment values validated to be strictly binary at load time.

use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::DagSpec;

/// A single row to explain: covariate values in dataset column order plus the
/// observed treatment.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub covariates: Vec<f64>,
    pub treatment: f64,
}

impl Instance {
    /// Covariates followed by the treatment, the layout used by samplers and
    /// coalition value functions.
    pub fn features(&self) -> Vec<f64> {
        let mut v = self.covariates.clone();
        v.push(self.treatment);
        v
    }
}

/// A dataset whose columns are the DAG covariates (in DAG node order),
/// the treatment, and optionally the outcome.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub covariate_names: Vec<String>,
    pub treatment_name: String,
    pub outcome_name: Option<String>,
    /// Row-major covariate matrix, one inner Vec per row.
    pub covariates: Vec<Vec<f64>>,
    pub treatment: Vec<f64>,
    pub outcome: Vec<f64>,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.covariates.len()
    }

    pub fn n_covariates(&self) -> usize {
        self.covariate_names.len()
    }

    pub fn instance(&self, row: usize) -> Result<Instance> {
        if row >= self.n_rows() {
            return Err(Error::InvalidArgument(format!(
                "row index {row} out of range for dataset with {} rows",
                self.n_rows()
            )));
        }
        Ok(Instance {
            covariates: self.covariates[row].clone(),
            treatment: self.treatment[row],
        })
    }

    /// Rows as covariates+treatment feature vectors (no outcome).
    pub fn feature_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows())
            .map(|i| {
                let mut v = self.covariates[i].clone();
                v.push(self.treatment[i]);
                v
            })
            .collect()
    }

    /// Design matrix rows for outcome-model fitting: covariates + treatment.
    pub fn xy(&self) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        if self.outcome_name.is_none() {
            return Err(Error::Schema(
                "dataset has no outcome column; cannot fit an outcome model".to_string(),
            ));
        }
        Ok((self.feature_rows(), self.outcome.clone()))
    }

    pub fn from_columns(
        covariate_names: Vec<String>,
        treatment_name: &str,
        outcome_name: Option<&str>,
        covariates: Vec<Vec<f64>>,
        treatment: Vec<f64>,
        outcome: Vec<f64>,
    ) -> Result<Self> {
        let ds = Dataset {
            covariate_names,
            treatment_name: treatment_name.to_string(),
            outcome_name: outcome_name.map(|s| s.to_string()),
            covariates,
            treatment,
            outcome,
        };
        ds.validate_shapes()?;
        Ok(ds)
    }

    fn validate_shapes(&self) -> Result<()> {
        let n = self.covariates.len();
        if self.treatment.len() != n {
            return Err(Error::Schema(format!(
                "treatment column has {} rows, covariates have {n}",
                self.treatment.len()
            )));
        }
        if self.outcome_name.is_some() && self.outcome.len() != n {
            return Err(Error::Schema(format!(
                "outcome column has {} rows, covariates have {n}",
                self.outcome.len()
            )));
        }
        for (i, row) in self.covariates.iter().enumerate() {
            if row.len() != self.covariate_names.len() {
                return Err(Error::Schema(format!(
                    "row {i} has {} covariates, expected {}",
                    row.len(),
                    self.covariate_names.len()
                )));
            }
        }
        for &t in &self.treatment {
            if t != 0.0 && t != 1.0 {
                return Err(Error::NonBinaryTreatment {
                    column: self.treatment_name.clone(),
                    value: t,
                });
            }
        }
        Ok(())
    }

    /// Read a CSV with a header row, aligning columns to the DAG: every
    /// covariate of the DAG must be present, as must the treatment; the
    /// outcome column is optional.
    pub fn from_csv_path(path: &Path, dag: &DagSpec) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let headers: Vec<String> = reader
            .headers()?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let col = |name: &str| -> Result<usize> {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Schema(format!("CSV is missing required column {name}")))
        };
        let covariate_names = dag.covariates();
        let cov_cols: Vec<usize> = covariate_names
            .iter()
            .map(|n| col(n))
            .collect::<Result<_>>()?;
        let t_col = col(&dag.treatment)?;
        let y_col = headers.iter().position(|h| *h == dag.outcome);

        let mut covariates = Vec::new();
        let mut treatment = Vec::new();
        let mut outcome = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let parse = |j: usize| -> Result<f64> {
                record
                    .get(j)
                    .unwrap_or("")
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| {
                        Error::Schema(format!(
                            "row {i}, column {}: value {:?} is not numeric",
                            headers[j],
                            record.get(j).unwrap_or("")
                        ))
                    })
            };
            covariates.push(cov_cols.iter().map(|&j| parse(j)).collect::<Result<_>>()?);
            treatment.push(parse(t_col)?);
            if let Some(j) = y_col {
                outcome.push(parse(j)?);
            }
        }
        Dataset::from_columns(
            covariate_names,
            &dag.treatment,
            y_col.map(|_| dag.outcome.as_str()),
            covariates,
            treatment,
            outcome,
        )
    }

    pub fn to_csv_path(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        let mut header: Vec<&str> = self.covariate_names.iter().map(|s| s.as_str()).collect();
        header.push(&self.treatment_name);
        if let Some(y) = &self.outcome_name {
            header.push(y);
        }
        writer.write_record(&header)?;
        for i in 0..self.n_rows() {
            let mut row: Vec<String> = self.covariates[i].iter().map(|v| v.to_string()).collect();
            row.push(self.treatment[i].to_string());
            if self.outcome_name.is_some() {
                row.push(self.outcome[i].to_string());
            }
            writer.write_record(&row)?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Split into (train, test) at `train_fraction` of rows, in row order.
    pub fn split(&self, train_fraction: f64) -> (Dataset, Dataset) {
        let n_train = ((self.n_rows() as f64) * train_fraction).round() as usize;
        let take = |range: std::ops::Range<usize>| Dataset {
            covariate_names: self.covariate_names.clone(),
            treatment_name: self.treatment_name.clone(),
            outcome_name: self.outcome_name.clone(),
            covariates: self.covariates[range.clone()].to_vec(),
            treatment: self.treatment[range.clone()].to_vec(),
            outcome: if self.outcome_name.is_some() {
                self.outcome[range].to_vec()
            } else {
                vec![]
            },
        };
        (take(0..n_train), take(n_train..self.n_rows()))
    }
}
