//! Executable structural causal models over the sampler's column layout
//! (covariates in DAG order, treatment last).
//!
//! A [`GenerativeScenario`] can sample marginally, under do-interventions
//! (graph surgery: clamp the intervened nodes, ancestrally sample the rest),
//! and conditionally. Conditioning works by rejection, made tractable by two
//! exact reductions applied first:
//!
//! 1. evidence pruning: an evidence node that is d-separated from the query
//!    nodes given the remaining evidence is dropped;
//! 2. clamping: an evidence node all of whose parents are themselves evidence
//!    contributes a constant likelihood factor, so it is clamped rather than
//!    rejected on.
//!
//! What remains must be discrete (Bernoulli) evidence; continuous non-root
//! evidence that survives both reductions is an error, since the event has
//! probability zero under rejection.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::DagSpec;
use crate::rng::{rng_from_seed, standard_normal};

type ParentFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type TransformFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// Structural equation attached to a node.
#[derive(Clone)]
pub enum NodeKind {
    /// Root uniform on [0, 1).
    Uniform01,
    /// Bernoulli with success probability computed from parent values.
    Bernoulli(ParentFn),
    /// Deterministic transform of parent values and one uniform draw;
    /// continuous, so it can be clamped but never rejected on.
    Transform(TransformFn),
    /// Gaussian with parent-dependent mean and fixed standard deviation.
    Gaussian { mean: ParentFn, sd: f64 },
}

impl NodeKind {
    fn is_discrete(&self) -> bool {
        matches!(self, NodeKind::Bernoulli(_))
    }
}

#[derive(Clone)]
pub struct ScenarioNode {
    pub name: String,
    /// Parent column indices, in the order the structural equation expects.
    pub parents: Vec<usize>,
    pub kind: NodeKind,
}

impl ScenarioNode {
    pub fn uniform(name: &str) -> Self {
        ScenarioNode {
            name: name.to_string(),
            parents: vec![],
            kind: NodeKind::Uniform01,
        }
    }

    pub fn bernoulli(
        name: &str,
        parents: Vec<usize>,
        p: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ScenarioNode {
            name: name.to_string(),
            parents,
            kind: NodeKind::Bernoulli(Arc::new(p)),
        }
    }

    pub fn transform(
        name: &str,
        parents: Vec<usize>,
        f: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ScenarioNode {
            name: name.to_string(),
            parents,
            kind: NodeKind::Transform(Arc::new(f)),
        }
    }
}

/// A structural causal model whose node list is exactly the sampler columns.
#[derive(Clone)]
pub struct GenerativeScenario {
    nodes: Vec<ScenarioNode>,
    topo: Vec<usize>,
    /// Graph restated as a DagSpec so d-separation queries can be reused.
    skeleton: DagSpec,
}

/// Per-draw rejection attempts before conditioning is declared infeasible.
const MAX_REJECTION_TRIES: usize = 100_000;

impl GenerativeScenario {
    pub fn new(nodes: Vec<ScenarioNode>) -> Result<Self> {
        let names: Vec<String> = nodes.iter().map(|n| n.name.clone()).collect();
        let mut edges = Vec::new();
        for (i, node) in nodes.iter().enumerate() {
            for &p in &node.parents {
                if p >= nodes.len() {
                    return Err(Error::InvalidArgument(format!(
                        "node {} references parent index {p} out of range",
                        node.name
                    )));
                }
                edges.push((names[p].clone(), names[i].clone()));
            }
        }
        // treatment/outcome are irrelevant for d-separation queries.
        let skeleton = DagSpec::new(names.clone(), edges, &names[0], &names[0]);
        let topo = skeleton
            .topological_order()
            .ok_or_else(|| Error::InvalidDag("scenario graph has a cycle".into()))?;
        Ok(GenerativeScenario {
            nodes,
            topo,
            skeleton,
        })
    }

    pub fn n_columns(&self) -> usize {
        self.nodes.len()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.nodes.iter().map(|n| n.name.clone()).collect()
    }

    fn draw_node<R: Rng>(&self, idx: usize, row: &[f64], rng: &mut R) -> f64 {
        let node = &self.nodes[idx];
        let parent_vals: Vec<f64> = node.parents.iter().map(|&p| row[p]).collect();
        match &node.kind {
            NodeKind::Uniform01 => rng.gen(),
            NodeKind::Bernoulli(p) => f64::from(rng.gen_bool(p(&parent_vals).clamp(0.0, 1.0))),
            NodeKind::Transform(f) => f(&parent_vals, rng.gen()),
            NodeKind::Gaussian { mean, sd } => mean(&parent_vals) + sd * standard_normal(rng),
        }
    }

    /// One ancestral sample with `clamped[i]` values held fixed.
    fn ancestral_row<R: Rng>(&self, clamped: &[Option<f64>], rng: &mut R) -> Vec<f64> {
        let mut row = vec![0.0; self.nodes.len()];
        for &i in &self.topo {
            row[i] = match clamped[i] {
                Some(v) => v,
                None => self.draw_node(i, &row, rng),
            };
        }
        row
    }

    pub fn sample_marginal(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let clamped = vec![None; self.nodes.len()];
        let mut rng = rng_from_seed(seed);
        (0..n).map(|_| self.ancestral_row(&clamped, &mut rng)).collect()
    }

    /// Graph-surgery interventional sampling: intervened nodes are clamped,
    /// everything else follows its structural equation.
    pub fn sample_do(&self, interventions: &[(usize, f64)], n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut clamped = vec![None; self.nodes.len()];
        for &(i, v) in interventions {
            clamped[i] = Some(v);
        }
        let mut rng = rng_from_seed(seed);
        (0..n).map(|_| self.ancestral_row(&clamped, &mut rng)).collect()
    }

    /// Observational conditional sampling of the unknown columns given
    /// `known` (column, value) pairs. Returned rows contain all columns, with
    /// the known ones at their conditioned values.
    pub fn sample_conditional(
        &self,
        known: &[(usize, f64)],
        n: usize,
        seed: u64,
    ) -> Result<Vec<Vec<f64>>> {
        let m = self.nodes.len();
        let mut value: Vec<Option<f64>> = vec![None; m];
        for &(i, v) in known {
            value[i] = Some(v);
        }
        let query: Vec<usize> = (0..m).filter(|&i| value[i].is_none()).collect();
        if query.is_empty() {
            let row: Vec<f64> = value.iter().map(|v| v.unwrap()).collect();
            return Ok(vec![row; n]);
        }

        // 1. Prune evidence d-separated from the query given the rest.
        let mut evidence: Vec<usize> = known.iter().map(|&(i, _)| i).collect();
        evidence.sort_unstable();
        evidence.dedup();
        loop {
            let mut removed = false;
            for k in 0..evidence.len() {
                let e = evidence[k];
                let rest: Vec<&str> = evidence
                    .iter()
                    .filter(|&&o| o != e)
                    .map(|&o| self.nodes[o].name.as_str())
                    .collect();
                let q_names: Vec<&str> = query.iter().map(|&i| self.nodes[i].name.as_str()).collect();
                if self
                    .skeleton
                    .d_separated(&q_names, &[self.nodes[e].name.as_str()], &rest)?
                {
                    evidence.remove(k);
                    removed = true;
                    break;
                }
            }
            if !removed {
                break;
            }
        }

        // 2. Clamp evidence nodes whose parents are all evidence.
        let in_evidence = |i: usize, ev: &[usize]| ev.contains(&i);
        let mut clamped: Vec<Option<f64>> = vec![None; m];
        let mut reject_on: Vec<usize> = Vec::new();
        for &e in &evidence {
            if self.nodes[e].parents.iter().all(|&p| in_evidence(p, &evidence)) {
                clamped[e] = value[e];
            } else if self.nodes[e].kind.is_discrete() {
                reject_on.push(e);
            } else {
                return Err(Error::ZeroProbabilityEvent(format!(
                    "cannot condition on continuous non-root node {} without conditioning on its parents",
                    self.nodes[e].name
                )));
            }
        }

        // 3. Rejection sampling on the remaining discrete evidence.
        let mut rng = rng_from_seed(seed);
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let mut accepted = None;
            for _ in 0..MAX_REJECTION_TRIES {
                let row = self.ancestral_row(&clamped, &mut rng);
                if reject_on.iter().all(|&e| row[e] == value[e].unwrap()) {
                    accepted = Some(row);
                    break;
                }
            }
            let mut row = accepted.ok_or_else(|| {
                Error::ZeroProbabilityEvent(format!(
                    "rejection sampling exhausted {MAX_REJECTION_TRIES} tries; evidence {:?} has (near-)zero probability",
                    reject_on
                        .iter()
                        .map(|&e| format!("{}={}", self.nodes[e].name, value[e].unwrap()))
                        .collect::<Vec<_>>()
                ))
            })?;
            // Pruned evidence columns still carry their conditioned values in
            // the output row.
            for (i, v) in value.iter().enumerate() {
                if let Some(v) = v {
                    row[i] = *v;
                }
            }
            rows.push(row);
        }
        Ok(rows)
    }
}
