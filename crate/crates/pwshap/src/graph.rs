//! User-supplied causal DAG: validation, d-separation, and enumeration of
//! treatment-to-outcome paths with causal role labels.
//!
//! The DAG is immutable after construction and safe for concurrent read-only
//! queries. Arrow directions never change any computed number downstream;
//! they only drive the interpretation labels attached to path effects.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Directed acyclic graph over named variables with designated treatment and
/// outcome nodes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DagSpec {
    pub nodes: Vec<String>,
    /// (parent, child) name pairs.
    pub edges: Vec<(String, String)>,
    pub treatment: String,
    pub outcome: String,
}

/// Causal role of a treatment-to-outcome path, derived from the orientation
/// of its first hop and the position of its inner nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathRole {
    /// The direct edge T -> Y.
    Direct,
    /// First hop T <- C: the covariate opens a back-door.
    Confounding,
    /// First hop T -> C: the covariate transmits the treatment.
    Mediating,
    /// No T edge; the covariate feeds the outcome and can only modify the
    /// effect of T.
    Moderating,
    /// Both a T -> C edge and a back-door route into C; the two effects are
    /// indiscernible so we label rather than split.
    Mixed,
}

/// Edge orientation along a T..Y path hop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Forward,
    Backward,
}

/// An undirected path from treatment to outcome through covariates, or a
/// merged node-group standing for several overlapping paths.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CausalPath {
    /// Covariate names between T and Y; empty for the direct edge.
    pub inner_nodes: Vec<String>,
    /// Per-hop orientation along T..Y for genuine single-route paths; empty
    /// for merged groups and pure moderators.
    pub edge_orientations: Vec<Orientation>,
    pub role: PathRole,
    /// True when this entry merges several overlapping routes into one
    /// node group.
    pub merged: bool,
}

impl CausalPath {
    pub fn is_direct(&self) -> bool {
        self.inner_nodes.is_empty()
    }

    pub fn label(&self) -> String {
        if self.is_direct() {
            "direct".to_string()
        } else {
            self.inner_nodes.join("+")
        }
    }
}

impl DagSpec {
    pub fn new(
        nodes: Vec<String>,
        edges: Vec<(String, String)>,
        treatment: &str,
        outcome: &str,
    ) -> Self {
        DagSpec {
            nodes,
            edges,
            treatment: treatment.to_string(),
            outcome: outcome.to_string(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            nodes: Vec<String>,
            edges: Vec<(String, String)>,
            treatment: String,
            outcome: String,
        }
        let raw: Raw = serde_json::from_str(text)?;
        Ok(DagSpec {
            nodes: raw.nodes,
            edges: raw.edges,
            treatment: raw.treatment,
            outcome: raw.outcome,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "nodes": self.nodes,
            "edges": self.edges,
            "treatment": self.treatment,
            "outcome": self.outcome,
        })
        .to_string()
    }

    pub fn node_index(&self, name: &str) -> Result<usize> {
        self.nodes
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    /// Covariate names: all nodes except treatment and outcome, in node order.
    pub fn covariates(&self) -> Vec<String> {
        self.nodes
            .iter()
            .filter(|n| **n != self.treatment && **n != self.outcome)
            .cloned()
            .collect()
    }

    fn edge_indices(&self) -> Result<Vec<(usize, usize)>> {
        self.edges
            .iter()
            .map(|(p, c)| Ok((self.node_index(p)?, self.node_index(c)?)))
            .collect()
    }

    fn parents_of(&self, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
        let mut parents = vec![Vec::new(); self.nodes.len()];
        for &(p, c) in edges {
            parents[c].push(p);
        }
        parents
    }

    fn children_of(&self, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
        let mut children = vec![Vec::new(); self.nodes.len()];
        for &(p, c) in edges {
            children[p].push(c);
        }
        children
    }

    pub fn has_edge(&self, parent: &str, child: &str) -> bool {
        self.edges
            .iter()
            .any(|(p, c)| p == parent && c == child)
    }

    /// Topological order of node indices, or None if the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let edges = self.edge_indices().ok()?;
        let mut indegree = vec![0usize; self.nodes.len()];
        for &(_, c) in &edges {
            indegree[c] += 1;
        }
        let children = self.children_of(&edges);
        let mut queue: VecDeque<usize> = (0..self.nodes.len()).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(n) = queue.pop_front() {
            order.push(n);
            for &c in &children[n] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        (order.len() == self.nodes.len()).then_some(order)
    }

    /// Is `a` a (proper) ancestor of `b` via directed edges?
    pub fn is_ancestor(&self, a: &str, b: &str) -> Result<bool> {
        let (ai, bi) = (self.node_index(a)?, self.node_index(b)?);
        let edges = self.edge_indices()?;
        let children = self.children_of(&edges);
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![ai];
        while let Some(n) = stack.pop() {
            for &c in &children[n] {
                if c == bi {
                    return Ok(true);
                }
                if !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        Ok(false)
    }

    /// Check every structural invariant; violations are returned as data,
    /// not raised as errors.
    pub fn validate(&self) -> Vec<String> {
        let mut violations = Vec::new();
        let mut seen = HashSet::new();
        for n in &self.nodes {
            if !seen.insert(n.clone()) {
                violations.push(format!("duplicate node name: {n}"));
            }
            if n.contains(',') {
                violations.push(format!("node name contains a comma: {n}"));
            }
        }
        for (p, c) in &self.edges {
            for end in [p, c] {
                if !self.nodes.iter().any(|n| n == end) {
                    violations.push(format!("edge references unknown node: {end}"));
                }
            }
        }
        if !violations.is_empty() {
            return violations;
        }
        if self.treatment == self.outcome {
            violations.push("treatment and outcome must be distinct".to_string());
        }
        if self.node_index(&self.treatment).is_err() {
            violations.push(format!("treatment node {} not in nodes", self.treatment));
        }
        if self.node_index(&self.outcome).is_err() {
            violations.push(format!("outcome node {} not in nodes", self.outcome));
        }
        if !violations.is_empty() {
            return violations;
        }
        if self.topological_order().is_none() {
            violations.push("graph contains a cycle".to_string());
            return violations;
        }
        match self.is_ancestor(&self.treatment, &self.outcome) {
            Ok(true) => {}
            _ => violations.push(format!(
                "treatment {} is not an ancestor of outcome {}",
                self.treatment, self.outcome
            )),
        }
        // Y must be a sink with respect to the explained covariates.
        for (p, c) in &self.edges {
            if *p == self.outcome && *c != self.outcome {
                violations.push(format!("outcome has outgoing edge to {c}"));
            }
        }
        violations
    }

    /// d-separation of node sets `x` and `y` given `z`, by reachability over
    /// active trails (Bayes-ball).
    pub fn d_separated(&self, x: &[&str], y: &[&str], z: &[&str]) -> Result<bool> {
        let xi: Vec<usize> = x.iter().map(|n| self.node_index(n)).collect::<Result<_>>()?;
        let yi: HashSet<usize> = y
            .iter()
            .map(|n| self.node_index(n))
            .collect::<Result<_>>()?;
        let zi: HashSet<usize> = z
            .iter()
            .map(|n| self.node_index(n))
            .collect::<Result<_>>()?;
        let edges = self.edge_indices()?;
        let parents = self.parents_of(&edges);
        let children = self.children_of(&edges);

        // Ancestors of z (inclusive), needed for collider activation.
        let mut anc_z = zi.clone();
        let mut stack: Vec<usize> = zi.iter().copied().collect();
        while let Some(n) = stack.pop() {
            for &p in &parents[n] {
                if anc_z.insert(p) {
                    stack.push(p);
                }
            }
        }

        // States are (node, incoming direction): Up = arrived from a child,
        // Down = arrived from a parent.
        #[derive(Clone, Copy, PartialEq, Eq, Hash)]
        enum Dir {
            Up,
            Down,
        }
        let mut visited: HashSet<(usize, Dir)> = HashSet::new();
        let mut queue: VecDeque<(usize, Dir)> = xi.iter().map(|&i| (i, Dir::Up)).collect();

        while let Some((n, dir)) = queue.pop_front() {
            if !visited.insert((n, dir)) {
                continue;
            }
            if !zi.contains(&n) && yi.contains(&n) {
                return Ok(false);
            }
            match dir {
                Dir::Up => {
                    if !zi.contains(&n) {
                        for &p in &parents[n] {
                            queue.push_back((p, Dir::Up));
                        }
                        for &c in &children[n] {
                            queue.push_back((c, Dir::Down));
                        }
                    }
                }
                Dir::Down => {
                    if !zi.contains(&n) {
                        for &c in &children[n] {
                            queue.push_back((c, Dir::Down));
                        }
                    }
                    if anc_z.contains(&n) {
                        for &p in &parents[n] {
                            queue.push_back((p, Dir::Up));
                        }
                    }
                }
            }
        }
        Ok(true)
    }

    /// All undirected simple paths between two nodes whose inner nodes are
    /// covariates, as sequences of node indices.
    fn undirected_ty_paths(&self) -> Result<Vec<Vec<usize>>> {
        let t = self.node_index(&self.treatment)?;
        let y = self.node_index(&self.outcome)?;
        let edges = self.edge_indices()?;
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.nodes.len()];
        for &(p, c) in &edges {
            adj[p].insert(c);
            adj[c].insert(p);
        }
        let mut paths = Vec::new();
        let mut current = vec![t];
        let mut on_path = vec![false; self.nodes.len()];
        on_path[t] = true;
        fn dfs(
            node: usize,
            y: usize,
            adj: &[BTreeSet<usize>],
            allowed_inner: &dyn Fn(usize) -> bool,
            current: &mut Vec<usize>,
            on_path: &mut [bool],
            paths: &mut Vec<Vec<usize>>,
        ) {
            for &next in &adj[node] {
                if on_path[next] {
                    continue;
                }
                if next == y {
                    let mut p = current.clone();
                    p.push(y);
                    paths.push(p);
                    continue;
                }
                if !allowed_inner(next) {
                    continue;
                }
                current.push(next);
                on_path[next] = true;
                dfs(next, y, adj, allowed_inner, current, on_path, paths);
                on_path[next] = false;
                current.pop();
            }
        }
        let covariate_idx: HashSet<usize> = self
            .covariates()
            .iter()
            .map(|n| self.node_index(n))
            .collect::<Result<_>>()?;
        let allowed = |i: usize| covariate_idx.contains(&i);
        dfs(t, y, &adj, &allowed, &mut current, &mut on_path, &mut paths);
        Ok(paths)
    }

    /// Whether a back-door route from T into `cov` exists: an undirected path
    /// starting with an edge into T, not passing through Y.
    fn has_backdoor_route_to(&self, cov: &str) -> Result<bool> {
        let t = self.node_index(&self.treatment)?;
        let y = self.node_index(&self.outcome)?;
        let target = self.node_index(cov)?;
        let edges = self.edge_indices()?;
        let parents = self.parents_of(&edges);
        let mut adj: Vec<HashSet<usize>> = vec![HashSet::new(); self.nodes.len()];
        for &(p, c) in &edges {
            adj[p].insert(c);
            adj[c].insert(p);
        }
        // BFS over nodes reachable from a parent of T without visiting T or Y.
        let mut seen = vec![false; self.nodes.len()];
        let mut queue: VecDeque<usize> = parents[t].iter().copied().collect();
        while let Some(n) = queue.pop_front() {
            if n == t || n == y || seen[n] {
                continue;
            }
            if n == target {
                return Ok(true);
            }
            seen[n] = true;
            for &m in &adj[n] {
                if !seen[m] && m != t && m != y {
                    queue.push_back(m);
                }
            }
        }
        Ok(false)
    }

    fn single_covariate_role(&self, cov: &str) -> Result<PathRole> {
        let c_to_t = self.has_edge(cov, &self.treatment);
        let t_to_c = self.has_edge(&self.treatment, cov);
        Ok(if c_to_t {
            PathRole::Confounding
        } else if t_to_c {
            if self.has_backdoor_route_to(cov)? {
                PathRole::Mixed
            } else {
                PathRole::Mediating
            }
        } else {
            PathRole::Moderating
        })
    }

    /// Enumerate treatment-to-outcome paths. Always emits the direct edge
    /// (when present) and one single-covariate entry per covariate adjacent
    /// to the treatment or the outcome in the undirected skeleton. With
    /// `include_merged`, overlapping multi-node routes are additionally
    /// merged into node-group entries.
    pub fn enumerate_paths(&self, include_merged: bool) -> Result<Vec<CausalPath>> {
        let violations = self.validate();
        if !violations.is_empty() {
            return Err(Error::InvalidDag(violations.join("; ")));
        }
        let mut out = Vec::new();
        if self.has_edge(&self.treatment, &self.outcome) {
            out.push(CausalPath {
                inner_nodes: vec![],
                edge_orientations: vec![Orientation::Forward],
                role: PathRole::Direct,
                merged: false,
            });
        }
        for cov in self.covariates() {
            let adj_t = self.has_edge(&cov, &self.treatment) || self.has_edge(&self.treatment, &cov);
            let adj_y = self.has_edge(&cov, &self.outcome) || self.has_edge(&self.outcome, &cov);
            if !(adj_t || adj_y) {
                continue;
            }
            let role = self.single_covariate_role(&cov)?;
            let mut orient = Vec::new();
            if self.has_edge(&self.treatment, &cov) {
                orient.push(Orientation::Forward);
            } else if self.has_edge(&cov, &self.treatment) {
                orient.push(Orientation::Backward);
            }
            if self.has_edge(&cov, &self.outcome) {
                orient.push(Orientation::Forward);
            }
            out.push(CausalPath {
                inner_nodes: vec![cov],
                edge_orientations: if orient.len() == 2 { orient } else { vec![] },
                role,
                merged: false,
            });
        }
        if include_merged {
            out.extend(self.merged_paths()?);
        }
        out.sort_by(|a, b| {
            (a.inner_nodes.len(), &a.inner_nodes).cmp(&(b.inner_nodes.len(), &b.inner_nodes))
        });
        Ok(out)
    }

    /// Merge undirected T..Y routes with two or more inner covariates into
    /// node-group paths; routes sharing an inner node collapse into one group.
    fn merged_paths(&self) -> Result<Vec<CausalPath>> {
        let paths = self.undirected_ty_paths()?;
        let long: Vec<&Vec<usize>> = paths.iter().filter(|p| p.len() >= 4).collect();
        if long.is_empty() {
            return Ok(vec![]);
        }
        // Union-find over route indices keyed on shared inner nodes.
        let mut group_of: HashMap<usize, usize> = HashMap::new(); // node -> group id
        let mut groups: Vec<BTreeSet<usize>> = Vec::new();
        let mut first_hops: Vec<HashSet<Orientation>> = Vec::new();
        for p in &long {
            let inner = &p[1..p.len() - 1];
            let t = p[0];
            let hop = if self.has_edge(&self.nodes[t], &self.nodes[p[1]]) {
                Orientation::Forward
            } else {
                Orientation::Backward
            };
            let mut target: Option<usize> = None;
            for &n in inner {
                if let Some(&g) = group_of.get(&n) {
                    target = Some(g);
                    break;
                }
            }
            let g = match target {
                Some(g) => g,
                None => {
                    groups.push(BTreeSet::new());
                    first_hops.push(HashSet::new());
                    groups.len() - 1
                }
            };
            for &n in inner {
                if let Some(&other) = group_of.get(&n) {
                    if other != g {
                        let moved: Vec<usize> = groups[other].iter().copied().collect();
                        for m in moved {
                            groups[g].insert(m);
                            group_of.insert(m, g);
                        }
                        groups[other].clear();
                        let hops: Vec<Orientation> = first_hops[other].iter().copied().collect();
                        first_hops[g].extend(hops);
                        first_hops[other].clear();
                    }
                } else {
                    group_of.insert(n, g);
                }
                groups[g].insert(n);
            }
            first_hops[g].insert(hop);
        }
        let mut out = Vec::new();
        for (g, nodes) in groups.iter().enumerate() {
            if nodes.len() < 2 {
                continue;
            }
            let role = if first_hops[g].len() > 1 {
                PathRole::Mixed
            } else if first_hops[g].contains(&Orientation::Forward) {
                PathRole::Mediating
            } else {
                PathRole::Confounding
            };
            out.push(CausalPath {
                inner_nodes: nodes.iter().map(|&i| self.nodes[i].clone()).collect(),
                edge_orientations: vec![],
                role,
                merged: true,
            });
        }
        Ok(out)
    }
}
