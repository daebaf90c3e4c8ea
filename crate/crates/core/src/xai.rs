//! Binary decision models stored as labeled graphs, and interpretability
//! queries over them.
//!
//! Internal nodes are labeled with a variable name and have one out-edge
//! labeled `0` and one labeled `1`; leaves are labeled `0` or `1`. Every
//! root-to-leaf path reads a variable at most once, so a path consistent
//! with a partial instance can always be completed into an instance that
//! follows it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::graph::{Flavor, Graph, GraphDoc, GraphError, NodeIx};

/// Largest variable count for the exhaustive queries.
pub const VARIABLE_LIMIT: usize = 20;

/// Partial assignment of variables to 0/1.
pub type Instance = BTreeMap<String, bool>;

#[derive(Debug, Error)]
pub enum XaiError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("decision model needs a string \"root\"")]
    MissingRoot,
    #[error("decision model must be a labeled graph, got {0}")]
    NotLabeled(Flavor),
    #[error("unknown root {0}")]
    UnknownRoot(String),
    #[error("leaf {0} must be labeled 0 or 1")]
    BadLeaf(String),
    #[error("node {0} needs exactly one 0-edge and one 1-edge")]
    BadBranching(String),
    #[error("variable {variable} is read twice below node {node}")]
    NotReadOnce { node: String, variable: String },
    #[error("cycle through node {0}")]
    Cycle(String),
    #[error("no value for variable {0}")]
    MissingAssignment(String),
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("{count} variables exceed the limit of {limit}")]
    VariableLimitExceeded { count: usize, limit: usize },
    #[error("bad instance syntax: {0}")]
    InstanceSyntax(String),
}

#[derive(Debug, Clone)]
pub struct DecisionModel {
    graph: Graph,
    root: NodeIx,
    /// Children on 0 and on 1; `None` at leaves.
    branches: Vec<Option<(NodeIx, NodeIx)>>,
    variables: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReasonMode {
    #[default]
    SubsetMinimal,
    MinimumCardinality,
}

fn bit(label: Option<&str>) -> Option<bool> {
    match label {
        Some("0") => Some(false),
        Some("1") => Some(true),
        _ => None,
    }
}

impl DecisionModel {
    pub fn new(graph: Graph, root: &str) -> Result<Self, XaiError> {
        if graph.flavor() != Flavor::Labeled {
            return Err(XaiError::NotLabeled(graph.flavor()));
        }
        let root_ix = graph.node_ix(root).ok_or_else(|| XaiError::UnknownRoot(root.to_string()))?;
        let mut branches = Vec::with_capacity(graph.node_count());
        let mut variables = BTreeSet::new();
        for n in graph.nodes() {
            let id = || graph.node_id(n).to_string();
            let label = graph.node(n).label_atom();
            let outs = graph.out_edges(n);
            if outs.is_empty() {
                bit(label).ok_or_else(|| XaiError::BadLeaf(id()))?;
                branches.push(None);
                continue;
            }
            if bit(label).is_some() || outs.len() != 2 {
                return Err(XaiError::BadBranching(id()));
            }
            let (mut zero, mut one) = (None, None);
            for &e in outs {
                let to = graph.endpoints(e).1;
                match bit(graph.edge(e).label_atom()) {
                    Some(false) if zero.is_none() => zero = Some(to),
                    Some(true) if one.is_none() => one = Some(to),
                    _ => return Err(XaiError::BadBranching(id())),
                }
            }
            branches.push(Some((zero.expect("0-edge"), one.expect("1-edge"))));
            variables.insert(label.expect("labeled").to_string());
        }
        let model = DecisionModel { graph, root: root_ix, branches, variables: variables.into_iter().collect() };
        model.check_read_once()?;
        Ok(model)
    }

    /// Standard graph JSON with an extra `"root"` field.
    pub fn from_json(text: &str) -> Result<Self, XaiError> {
        let mut value: serde_json::Value = serde_json::from_str(text).map_err(GraphError::from)?;
        let root = value
            .as_object_mut()
            .and_then(|o| o.remove("root"))
            .and_then(|r| r.as_str().map(str::to_string))
            .ok_or(XaiError::MissingRoot)?;
        let doc: GraphDoc = serde_json::from_value(value).map_err(GraphError::from)?;
        let graph = Graph::try_from(doc).map_err(GraphError::from)?;
        DecisionModel::new(graph, &root)
    }

    /// Variables read at or below each node; fails on cycles and on
    /// variables read twice along a path.
    fn check_read_once(&self) -> Result<(), XaiError> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Open,
            Done,
        }
        let n = self.graph.node_count();
        let mut mark = vec![Mark::New; n];
        let mut below: Vec<BTreeSet<&str>> = vec![BTreeSet::new(); n];
        for start in self.graph.nodes() {
            if mark[start] != Mark::New {
                continue;
            }
            let mut stack = vec![(start, false)];
            while let Some((u, expanded)) = stack.pop() {
                if expanded {
                    if let Some((a, b)) = self.branches[u] {
                        let var = self.graph.node(u).label_atom().expect("labeled");
                        if below[a].contains(var) || below[b].contains(var) {
                            return Err(XaiError::NotReadOnce {
                                node: self.graph.node_id(u).to_string(),
                                variable: var.to_string(),
                            });
                        }
                        let mut set: BTreeSet<&str> = below[a].union(&below[b]).copied().collect();
                        set.insert(var);
                        below[u] = set;
                    }
                    mark[u] = Mark::Done;
                    continue;
                }
                match mark[u] {
                    Mark::Done => continue,
                    Mark::Open => return Err(XaiError::Cycle(self.graph.node_id(u).to_string())),
                    Mark::New => {}
                }
                mark[u] = Mark::Open;
                stack.push((u, true));
                if let Some((a, b)) = self.branches[u] {
                    for c in [a, b] {
                        match mark[c] {
                            Mark::Open => return Err(XaiError::Cycle(self.graph.node_id(c).to_string())),
                            Mark::New => stack.push((c, false)),
                            Mark::Done => {}
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn root(&self) -> NodeIx {
        self.root
    }

    /// Sorted variable names.
    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    fn var_of(&self, n: NodeIx) -> &str {
        self.graph.node(n).label_atom().expect("labeled")
    }

    fn leaf_value(&self, n: NodeIx) -> bool {
        bit(self.graph.node(n).label_atom()).expect("validated leaf")
    }

    fn check_known(&self, inst: &Instance) -> Result<(), XaiError> {
        match inst.keys().find(|k| self.variables.binary_search(k).is_err()) {
            Some(k) => Err(XaiError::UnknownVariable(k.clone())),
            None => Ok(()),
        }
    }

    fn limit(&self) -> Result<(), XaiError> {
        if self.variables.len() > VARIABLE_LIMIT {
            Err(XaiError::VariableLimitExceeded { count: self.variables.len(), limit: VARIABLE_LIMIT })
        } else {
            Ok(())
        }
    }

    /// Root-to-leaf path of `inst`, as nodes.
    pub fn trace(&self, inst: &Instance) -> Result<Vec<NodeIx>, XaiError> {
        let mut path = vec![self.root];
        let mut u = self.root;
        while let Some((zero, one)) = self.branches[u] {
            let var = self.var_of(u);
            let value = *inst.get(var).ok_or_else(|| XaiError::MissingAssignment(var.to_string()))?;
            u = if value { one } else { zero };
            path.push(u);
        }
        Ok(path)
    }

    pub fn classify(&self, inst: &Instance) -> Result<bool, XaiError> {
        let path = self.trace(inst)?;
        Ok(self.leaf_value(*path.last().expect("root")))
    }

    /// Some completion of `partial` classified as `target`, with variables
    /// the path leaves open set to 0.
    pub fn exists_instance(&self, target: bool, partial: &Instance) -> Result<Option<Instance>, XaiError> {
        self.check_known(partial)?;
        let mut dead = vec![false; self.graph.node_count()];
        let mut chosen = Instance::new();
        if !self.search(self.root, target, partial, &mut dead, &mut chosen) {
            return Ok(None);
        }
        let witness = self
            .variables
            .iter()
            .map(|v| {
                let value = partial.get(v).or_else(|| chosen.get(v)).copied().unwrap_or(false);
                (v.clone(), value)
            })
            .collect();
        Ok(Some(witness))
    }

    fn search(&self, u: NodeIx, target: bool, partial: &Instance, dead: &mut [bool], chosen: &mut Instance) -> bool {
        if dead[u] {
            return false;
        }
        let Some((zero, one)) = self.branches[u] else {
            let hit = self.leaf_value(u) == target;
            dead[u] = !hit;
            return hit;
        };
        let var = self.var_of(u).to_string();
        for (value, child) in [(false, zero), (true, one)] {
            if partial.get(&var).is_some_and(|&v| v != value) {
                continue;
            }
            chosen.insert(var.clone(), value);
            if self.search(child, target, partial, dead, chosen) {
                return true;
            }
            chosen.remove(&var);
        }
        dead[u] = true;
        false
    }

    /// Whether every completion of `partial` is classified as `target`.
    pub fn is_sufficient_reason(&self, partial: &Instance, target: bool) -> Result<bool, XaiError> {
        Ok(self.exists_instance(!target, partial)?.is_none())
    }

    /// A minimal sub-assignment of the total instance `inst` that forces its
    /// class.
    ///
    /// Subset-minimal mode tries to drop variables in name order and keeps
    /// each drop that leaves a sufficient reason. Minimum-cardinality mode
    /// returns the first sufficient subset of least size, subsets ordered
    /// lexicographically by variable name.
    pub fn minimal_sufficient_reason(&self, inst: &Instance, mode: ReasonMode) -> Result<Instance, XaiError> {
        self.check_known(inst)?;
        if let Some(v) = self.variables.iter().find(|v| !inst.contains_key(*v)) {
            return Err(XaiError::MissingAssignment(v.clone()));
        }
        let target = self.classify(inst)?;
        match mode {
            ReasonMode::SubsetMinimal => {
                let mut reason = inst.clone();
                for v in &self.variables {
                    let value = reason.remove(v).expect("total");
                    if !self.is_sufficient_reason(&reason, target)? {
                        reason.insert(v.clone(), value);
                    }
                }
                Ok(reason)
            }
            ReasonMode::MinimumCardinality => {
                self.limit()?;
                let n = self.variables.len();
                for size in 0..=n {
                    for subset in combinations(n, size) {
                        let reason: Instance =
                            subset.iter().map(|&i| (self.variables[i].clone(), inst[&self.variables[i]])).collect();
                        if self.is_sufficient_reason(&reason, target)? {
                            return Ok(reason);
                        }
                    }
                }
                unreachable!("the full instance is sufficient")
            }
        }
    }

    /// All subset-minimal partial instances sufficient for `target`, by
    /// size and then in lexicographic order.
    pub fn all_minimal_sufficient_reasons(&self, target: bool) -> Result<Vec<Instance>, XaiError> {
        self.limit()?;
        let n = self.variables.len();
        let mut found: Vec<Instance> = Vec::new();
        for size in 0..=n {
            for subset in combinations(n, size) {
                for bits in 0..1u32 << size {
                    let candidate: Instance = subset
                        .iter()
                        .enumerate()
                        .map(|(j, &i)| (self.variables[i].clone(), bits >> (size - 1 - j) & 1 == 1))
                        .collect();
                    let covered = found.iter().any(|r| r.iter().all(|(k, v)| candidate.get(k) == Some(v)));
                    if !covered && self.is_sufficient_reason(&candidate, target)? {
                        found.push(candidate);
                    }
                }
            }
        }
        Ok(found)
    }

    /// The first instance, in the order where the first variable is the most
    /// significant bit, whose class changes when only `feature` flips from 0
    /// to 1; `None` if the model never depends on `feature`.
    pub fn is_biased(&self, feature: &str) -> Result<Option<(Instance, Instance)>, XaiError> {
        if self.variables.binary_search_by(|v| v.as_str().cmp(feature)).is_err() {
            return Err(XaiError::UnknownVariable(feature.to_string()));
        }
        self.limit()?;
        for inst in all_instances(&self.variables) {
            if inst[feature] {
                continue;
            }
            let mut flipped = inst.clone();
            flipped.insert(feature.to_string(), true);
            if self.classify(&inst)? != self.classify(&flipped)? {
                return Ok(Some((inst, flipped)));
            }
        }
        Ok(None)
    }
}

/// All `size`-subsets of `0..n`, in lexicographic order.
fn combinations(n: usize, size: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut next = (size <= n).then(|| (0..size).collect::<Vec<_>>());
    std::iter::from_fn(move || {
        let current = next.take()?;
        let mut c = current.clone();
        let mut i = size;
        while i > 0 {
            i -= 1;
            if c[i] < n - size + i {
                c[i] += 1;
                for j in i + 1..size {
                    c[j] = c[j - 1] + 1;
                }
                next = Some(c);
                break;
            }
        }
        Some(current)
    })
}

/// Every total instance over `variables`, first variable most significant.
pub fn all_instances(variables: &[String]) -> impl Iterator<Item = Instance> + '_ {
    let n = variables.len();
    (0..1u64 << n)
        .map(move |bits| variables.iter().enumerate().map(|(i, v)| (v.clone(), bits >> (n - 1 - i) & 1 == 1)).collect())
}

/// Parses `x=1,y=0`; the empty string is the empty instance.
pub fn parse_instance(text: &str) -> Result<Instance, XaiError> {
    let mut out = Instance::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| XaiError::InstanceSyntax(part.to_string()))?;
        let value = bit(Some(v.trim())).ok_or_else(|| XaiError::InstanceSyntax(part.to_string()))?;
        out.insert(k.trim().to_string(), value);
    }
    Ok(out)
}

/// Displays an instance as `{x:1, y:0}`.
pub struct ShowInstance<'a>(pub &'a Instance);

impl fmt::Display for ShowInstance<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{k}:{}", *v as u8)?;
        }
        write!(f, "}}")
    }
}

pub fn instance_json(inst: &Instance) -> serde_json::Value {
    inst.iter().map(|(k, &v)| (k.clone(), serde_json::Value::from(v as u8))).collect::<serde_json::Map<_, _>>().into()
}
