//! Aggregate-combine graph neural networks as unary node queries, and
//! Weisfeiler-Lehman colour refinement.
//!
//! Layer 0 is the input labelling. Each layer maps the previous snapshot to
//! the next one, node by node, looking only at a node's own vector and the
//! vectors of its neighbours. A node's neighbours form a set: parallel edges
//! do not add weight.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Feature, Flavor, Graph, NodeIx};
use crate::query::{parse_test, Features, ParseError, Test};

/// Feature vectors of every node, indexed by node.
pub type Snapshot = Vec<Vec<Feature>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeighborMode {
    #[default]
    Undirected,
    /// Out- and in-neighbours are seen separately.
    Directed,
}

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("invalid model JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("in {context}: {source}")]
    Test {
        context: String,
        #[source]
        source: ParseError,
    },
    #[error("model has dimension {model} but the graph is {graph}")]
    DimensionMismatch { model: usize, graph: Flavor },
    #[error("feature index {index} outside 1..={dimension}")]
    FeatureIndex { index: usize, dimension: usize },
    #[error("layer {layer}: {what} has the wrong shape")]
    Shape { layer: usize, what: &'static str },
    #[error("node {node}: feature {value:?} is not a number")]
    NonNumeric { node: String, value: Option<String> },
    #[error("rule conditions `out`/`in` need directed mode")]
    DirectionalRule,
    #[error("rule condition `edge` needs edge features enabled")]
    EdgeFeaturesOff,
    #[error("a model needs at least one layer")]
    NoLayers,
}

/// One guarded update: when every present condition holds, feature `set.0`
/// becomes `set.1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub own: Option<Test>,
    /// Some neighbour, in either direction, passes.
    pub neighbor: Option<Test>,
    pub out: Option<Test>,
    pub incoming: Option<Test>,
    /// The edge linking the node to the witnessing neighbour passes.
    pub edge: Option<Test>,
    pub set: (usize, String),
}

impl Rule {
    pub fn new(feature: usize, value: impl Into<String>) -> Self {
        Rule { own: None, neighbor: None, out: None, incoming: None, edge: None, set: (feature, value.into()) }
    }

    pub fn when(mut self, own: Test) -> Self {
        self.own = Some(own);
        self
    }

    pub fn with_neighbor(mut self, t: Test) -> Self {
        self.neighbor = Some(t);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearLayer {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    /// In-neighbour weights, directed mode only.
    pub c: Option<Vec<Vec<f64>>>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    /// First matching rule wins; no match leaves the vector unchanged.
    Rule(Vec<Rule>),
    /// `clamp(A·x + B·Σ neighbours + b, 0, 1)`.
    Linear(LinearLayer),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Csl {
    Test(Test),
    Equals { feature: usize, value: String },
    Threshold { feature: usize, threshold: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gnn {
    dimension: usize,
    direction: NeighborMode,
    edge_features: bool,
    layers: Vec<Layer>,
    csl: Csl,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleDoc {
    #[serde(rename = "self")]
    own: Option<String>,
    neighbor: Option<String>,
    out: Option<String>,
    #[serde(rename = "in")]
    incoming: Option<String>,
    edge: Option<String>,
    set: (usize, String),
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum LayerDoc {
    Rule {
        rules: Vec<RuleDoc>,
    },
    Linear {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        #[serde(rename = "B")]
        b: Vec<Vec<f64>>,
        #[serde(rename = "C")]
        c: Option<Vec<Vec<f64>>>,
        #[serde(rename = "b")]
        bias: Vec<f64>,
    },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CslDoc {
    Test { test: String },
    Equals { feature: usize, equals: String },
    Threshold { feature: usize, threshold: f64 },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GnnDoc {
    dimension: usize,
    #[serde(default)]
    direction: NeighborMode,
    #[serde(default)]
    edge_features: bool,
    layers: Vec<LayerDoc>,
    csl: CslDoc,
}

fn parse_in(text: &str, d: usize, context: impl FnOnce() -> String) -> Result<Test, NeuralError> {
    parse_test(text, Flavor::Vector(d)).map_err(|source| NeuralError::Test { context: context(), source })
}

impl Gnn {
    pub fn new(
        dimension: usize,
        direction: NeighborMode,
        edge_features: bool,
        layers: Vec<Layer>,
        csl: Csl,
    ) -> Result<Self, NeuralError> {
        let gnn = Gnn { dimension, direction, edge_features, layers, csl };
        gnn.validate()?;
        Ok(gnn)
    }

    pub fn from_json(text: &str) -> Result<Self, NeuralError> {
        let doc: GnnDoc = serde_json::from_str(text)?;
        let d = doc.dimension;
        let opt = |t: &Option<String>, ctx: String| -> Result<Option<Test>, NeuralError> {
            t.as_deref().map(|s| parse_in(s, d, || ctx)).transpose()
        };
        let mut layers = Vec::with_capacity(doc.layers.len());
        for (i, layer) in doc.layers.into_iter().enumerate() {
            layers.push(match layer {
                LayerDoc::Rule { rules } => {
                    let mut out = Vec::with_capacity(rules.len());
                    for (j, r) in rules.into_iter().enumerate() {
                        let at = |field: &str| format!("layer {} rule {} `{field}`", i + 1, j + 1);
                        out.push(Rule {
                            own: opt(&r.own, at("self"))?,
                            neighbor: opt(&r.neighbor, at("neighbor"))?,
                            out: opt(&r.out, at("out"))?,
                            incoming: opt(&r.incoming, at("in"))?,
                            edge: opt(&r.edge, at("edge"))?,
                            set: r.set,
                        });
                    }
                    Layer::Rule(out)
                }
                LayerDoc::Linear { a, b, c, bias } => Layer::Linear(LinearLayer { a, b, c, bias }),
            });
        }
        let csl = match doc.csl {
            CslDoc::Test { test } => Csl::Test(parse_in(&test, d, || "csl".into())?),
            CslDoc::Equals { feature, equals } => Csl::Equals { feature, value: equals },
            CslDoc::Threshold { feature, threshold } => Csl::Threshold { feature, threshold },
        };
        Gnn::new(d, doc.direction, doc.edge_features, layers, csl)
    }

    fn validate(&self) -> Result<(), NeuralError> {
        let d = self.dimension;
        let index = |index: usize| {
            if (1..=d).contains(&index) {
                Ok(())
            } else {
                Err(NeuralError::FeatureIndex { index, dimension: d })
            }
        };
        if self.layers.is_empty() {
            return Err(NeuralError::NoLayers);
        }
        for (i, layer) in self.layers.iter().enumerate() {
            match layer {
                Layer::Rule(rules) => {
                    for r in rules {
                        index(r.set.0)?;
                        if (r.out.is_some() || r.incoming.is_some()) && self.direction != NeighborMode::Directed {
                            return Err(NeuralError::DirectionalRule);
                        }
                        if r.edge.is_some() && !self.edge_features {
                            return Err(NeuralError::EdgeFeaturesOff);
                        }
                        let tests = [&r.own, &r.neighbor, &r.out, &r.incoming, &r.edge];
                        for t in tests.into_iter().flatten() {
                            t.check_flavor(Flavor::Vector(d)).map_err(|kind| NeuralError::Test {
                                context: format!("layer {}", i + 1),
                                source: ParseError { offset: 0, kind },
                            })?;
                        }
                    }
                }
                Layer::Linear(l) => {
                    let square = |m: &Vec<Vec<f64>>| m.len() == d && m.iter().all(|row| row.len() == d);
                    let shape = |what| NeuralError::Shape { layer: i + 1, what };
                    if !square(&l.a) {
                        return Err(shape("A"));
                    }
                    if !square(&l.b) {
                        return Err(shape("B"));
                    }
                    match (&l.c, self.direction) {
                        (Some(c), NeighborMode::Directed) if !square(c) => return Err(shape("C")),
                        (Some(_), NeighborMode::Undirected) => return Err(shape("C")),
                        _ => {}
                    }
                    if l.bias.len() != d {
                        return Err(shape("b"));
                    }
                }
            }
        }
        match &self.csl {
            Csl::Test(_) => Ok(()),
            Csl::Equals { feature, .. } | Csl::Threshold { feature, .. } => index(*feature),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn direction(&self) -> NeighborMode {
        self.direction
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn csl(&self) -> &Csl {
        &self.csl
    }

    fn check_graph(&self, g: &Graph) -> Result<(), NeuralError> {
        match g.flavor() {
            Flavor::Vector(d) if d == self.dimension => Ok(()),
            other => Err(NeuralError::DimensionMismatch { model: self.dimension, graph: other }),
        }
    }
}

/// Neighbour sets of every node, in id order.
#[derive(Debug, Clone)]
struct Adjacency {
    any: Vec<Vec<NodeIx>>,
    out: Vec<Vec<NodeIx>>,
    incoming: Vec<Vec<NodeIx>>,
}

impl Adjacency {
    fn of(g: &Graph) -> Self {
        let n = g.node_count();
        let mut out = vec![BTreeSet::new(); n];
        let mut incoming = vec![BTreeSet::new(); n];
        for e in 0..g.edge_count() {
            let (s, t) = g.endpoints(e);
            out[s].insert(t);
            incoming[t].insert(s);
        }
        let any = (0..n).map(|u| out[u].union(&incoming[u]).copied().collect()).collect();
        let flat = |v: Vec<BTreeSet<NodeIx>>| v.into_iter().map(|s| s.into_iter().collect()).collect();
        Adjacency { any, out: flat(out), incoming: flat(incoming) }
    }
}

fn number(g: &Graph, u: NodeIx, f: &Feature) -> Result<f64, NeuralError> {
    f.as_deref()
        .and_then(|s| s.trim().parse::<f64>().ok())
        .filter(|x| x.is_finite())
        .ok_or_else(|| NeuralError::NonNumeric { node: g.node_id(u).to_string(), value: f.clone() })
}

/// Decimal rendering used for computed features: integral values print
/// without a fractional part.
pub fn format_number(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

#[derive(Clone, Copy)]
enum Side {
    Any,
    Out,
    In,
}

fn witness(g: &Graph, prev: &Snapshot, u: NodeIx, side: Side, test: &Test, edge: Option<&Test>) -> bool {
    match edge {
        None => {
            let adj = match side {
                Side::Any => g
                    .out_edges(u)
                    .iter()
                    .map(|&e| g.endpoints(e).1)
                    .chain(g.in_edges(u).iter().map(|&e| g.endpoints(e).0))
                    .any(|v| test.matches(&Features(&prev[v]))),
                Side::Out => g.out_edges(u).iter().any(|&e| test.matches(&Features(&prev[g.endpoints(e).1]))),
                Side::In => g.in_edges(u).iter().any(|&e| test.matches(&Features(&prev[g.endpoints(e).0]))),
            };
            adj
        }
        Some(et) => {
            let outs = g.out_edges(u).iter().map(|&e| (e, g.endpoints(e).1));
            let ins = g.in_edges(u).iter().map(|&e| (e, g.endpoints(e).0));
            let ok = |(e, v): (usize, NodeIx)| et.matches(g.edge(e)) && test.matches(&Features(&prev[v]));
            match side {
                Side::Any => outs.chain(ins).any(ok),
                Side::Out => outs.clone().any(ok),
                Side::In => ins.clone().any(ok),
            }
        }
    }
}

fn rule_fires(g: &Graph, prev: &Snapshot, u: NodeIx, r: &Rule) -> bool {
    if let Some(t) = &r.own {
        if !t.matches(&Features(&prev[u])) {
            return false;
        }
    }
    let mut sides: Vec<(Side, &Test)> = Vec::new();
    if let Some(t) = &r.neighbor {
        sides.push((Side::Any, t));
    }
    if let Some(t) = &r.out {
        sides.push((Side::Out, t));
    }
    if let Some(t) = &r.incoming {
        sides.push((Side::In, t));
    }
    let any = Test::Any;
    if sides.is_empty() && r.edge.is_some() {
        sides.push((Side::Any, &any));
    }
    sides.into_iter().all(|(side, t)| witness(g, prev, u, side, t, r.edge.as_ref()))
}

fn mat_vec(m: &[Vec<f64>], x: &[f64], acc: &mut [f64]) {
    for (row, slot) in m.iter().zip(acc.iter_mut()) {
        *slot += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

fn apply_linear(
    g: &Graph,
    adj: &Adjacency,
    mode: NeighborMode,
    prev: &Snapshot,
    l: &LinearLayer,
) -> Result<Snapshot, NeuralError> {
    let d = l.bias.len();
    let numeric: Vec<Vec<f64>> =
        prev.iter().enumerate().map(|(u, x)| x.iter().map(|f| number(g, u, f)).collect()).collect::<Result<_, _>>()?;
    let sum = |nodes: &[NodeIx]| {
        let mut s = vec![0.0; d];
        for &v in nodes {
            for (a, b) in s.iter_mut().zip(&numeric[v]) {
                *a += b;
            }
        }
        s
    };
    Ok((0..g.node_count())
        .into_par_iter()
        .map(|u| {
            let mut acc = l.bias.clone();
            mat_vec(&l.a, &numeric[u], &mut acc);
            match mode {
                NeighborMode::Undirected => mat_vec(&l.b, &sum(&adj.any[u]), &mut acc),
                NeighborMode::Directed => {
                    mat_vec(&l.b, &sum(&adj.out[u]), &mut acc);
                    if let Some(c) = &l.c {
                        mat_vec(c, &sum(&adj.incoming[u]), &mut acc);
                    }
                }
            }
            acc.into_iter().map(|x| Some(format_number(x.clamp(0.0, 1.0)))).collect()
        })
        .collect())
}

/// All `L + 1` snapshots, layer 0 being the input labelling.
pub fn run_layers(g: &Graph, gnn: &Gnn) -> Result<Vec<Snapshot>, NeuralError> {
    gnn.check_graph(g)?;
    let adj = Adjacency::of(g);
    let mut snapshots: Vec<Snapshot> = vec![g.nodes().map(|u| g.node(u).features.clone()).collect()];
    for layer in &gnn.layers {
        let prev = snapshots.last().expect("layer 0");
        let next = match layer {
            Layer::Rule(rules) => (0..g.node_count())
                .into_par_iter()
                .map(|u| {
                    let mut x = prev[u].clone();
                    if let Some(r) = rules.iter().find(|r| rule_fires(g, prev, u, r)) {
                        x[r.set.0 - 1] = Some(r.set.1.clone());
                    }
                    x
                })
                .collect(),
            Layer::Linear(l) => apply_linear(g, &adj, gnn.direction, prev, l)?,
        };
        snapshots.push(next);
    }
    Ok(snapshots)
}

fn csl_holds(g: &Graph, u: NodeIx, csl: &Csl, x: &[Feature]) -> Result<bool, NeuralError> {
    Ok(match csl {
        Csl::Test(t) => t.matches(&Features(x)),
        Csl::Equals { feature, value } => x[feature - 1].as_deref() == Some(value.as_str()),
        Csl::Threshold { feature, threshold } => number(g, u, &x[feature - 1])? >= *threshold,
    })
}

/// `{ u | CSL(u^(L)) }`.
pub fn classify(g: &Graph, gnn: &Gnn) -> Result<BTreeSet<NodeIx>, NeuralError> {
    let snapshots = run_layers(g, gnn)?;
    classify_snapshot(g, gnn, snapshots.last().expect("at least one layer"))
}

pub fn classify_snapshot(g: &Graph, gnn: &Gnn, last: &Snapshot) -> Result<BTreeSet<NodeIx>, NeuralError> {
    let mut out = BTreeSet::new();
    for u in g.nodes() {
        if csl_holds(g, u, &gnn.csl, &last[u])? {
            out.insert(u);
        }
    }
    Ok(out)
}

/// Nodes whose feature `j` (1-based) equals `value` in `snapshot`.
pub fn flagged(snapshot: &Snapshot, j: usize, value: &str) -> BTreeSet<NodeIx> {
    snapshot
        .iter()
        .enumerate()
        .filter(|(_, x)| x.get(j - 1).and_then(|f| f.as_deref()) == Some(value))
        .map(|(u, _)| u)
        .collect()
}

fn canonical<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let ranks: BTreeMap<&K, usize> =
        keys.iter().collect::<BTreeSet<_>>().into_iter().enumerate().map(|(i, k)| (k, i)).collect();
    keys.iter().map(|k| ranks[k]).collect()
}

/// Colour of every node at rounds `0..=rounds`. Round 0 ranks the feature
/// vectors; round `t + 1` ranks (own colour, sorted neighbour colours).
pub fn wl_colors(g: &Graph, rounds: usize) -> Vec<Vec<usize>> {
    refine(g, rounds, NeighborMode::Undirected)
}

/// As [`wl_colors`], keeping out- and in-neighbour colours apart.
pub fn wl_colors_directed(g: &Graph, rounds: usize) -> Vec<Vec<usize>> {
    refine(g, rounds, NeighborMode::Directed)
}

fn refine(g: &Graph, rounds: usize, mode: NeighborMode) -> Vec<Vec<usize>> {
    let adj = Adjacency::of(g);
    let initial: Vec<Vec<Feature>> = g.nodes().map(|u| g.node(u).features.clone()).collect();
    let mut colors = vec![canonical(&initial)];
    for _ in 0..rounds {
        let cur = colors.last().expect("round 0");
        let sorted = |nodes: &[NodeIx]| {
            let mut c: Vec<usize> = nodes.iter().map(|&v| cur[v]).collect();
            c.sort_unstable();
            c
        };
        let keys: Vec<(usize, Vec<usize>, Vec<usize>)> = g
            .nodes()
            .map(|u| match mode {
                NeighborMode::Undirected => (cur[u], sorted(&adj.any[u]), Vec::new()),
                NeighborMode::Directed => (cur[u], sorted(&adj.out[u]), sorted(&adj.incoming[u])),
            })
            .collect();
        colors.push(canonical(&keys));
    }
    colors
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn ids(g: &Graph, s: &BTreeSet<NodeIx>) -> Vec<String> {
        s.iter().map(|&n| g.node_id(n).to_string()).collect()
    }

    fn t(s: &str, d: usize) -> Test {
        parse_test(s, Flavor::Vector(d)).unwrap()
    }

    #[test]
    fn bus_trace() {
        let g = fixtures::fig2();
        let gnn = fixtures::fig2_gnn();
        let snaps = run_layers(&g, &gnn).unwrap();
        assert_eq!(snaps.len(), 3);
        assert!(flagged(&snaps[0], 2, "1").is_empty());
        assert_eq!(ids(&g, &flagged(&snaps[1], 2, "1")), ["n1"]);
        assert_eq!(ids(&g, &flagged(&snaps[2], 2, "1")), ["n1", "n3"]);
        assert_eq!(ids(&g, &classify(&g, &gnn).unwrap()), ["n3"]);
    }

    #[test]
    fn identity_layers_keep_input() {
        let g = fixtures::fig2();
        let gnn = Gnn::new(
            2,
            NeighborMode::Undirected,
            false,
            vec![Layer::Rule(vec![]), Layer::Rule(vec![])],
            Csl::Equals { feature: 1, value: "nothing".into() },
        )
        .unwrap();
        let snaps = run_layers(&g, &gnn).unwrap();
        assert!(snaps.iter().all(|s| s == &snaps[0]));
        assert!(classify(&g, &gnn).unwrap().is_empty());
    }

    fn binary_graph() -> Graph {
        Graph::from_json(
            r#"{"model":"vector","dimension":2,
                "nodes":[{"id":"a","features":["1","0"]},{"id":"b","features":["0","1"]},
                         {"id":"c","features":["0","0"]}],
                "edges":[{"id":"e","src":"a","dst":"b","features":["0","0"]},
                         {"id":"f","src":"a","dst":"b","features":["0","0"]}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn linear_identity_and_sum() {
        let g = binary_graph();
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let zero = vec![vec![0.0; 2]; 2];
        let layer = |b: Vec<Vec<f64>>| Layer::Linear(LinearLayer { a: id.clone(), b, c: None, bias: vec![0.0, 0.0] });
        let csl = Csl::Threshold { feature: 2, threshold: 1.0 };
        let gnn = Gnn::new(2, NeighborMode::Undirected, false, vec![layer(zero)], csl.clone()).unwrap();
        let snaps = run_layers(&g, &gnn).unwrap();
        assert_eq!(snaps[0], snaps[1]);
        // parallel edges a->b count once, so c gets nothing and a gets b's flag
        let gnn = Gnn::new(2, NeighborMode::Undirected, false, vec![layer(id.clone())], csl).unwrap();
        let snaps = run_layers(&g, &gnn).unwrap();
        let s = |v: &[&str]| v.iter().map(|x| Some(x.to_string())).collect::<Vec<_>>();
        assert_eq!(snaps[1], vec![s(&["1", "1"]), s(&["1", "1"]), s(&["0", "0"])]);
        assert_eq!(ids(&g, &classify(&g, &gnn).unwrap()), ["a", "b"]);
    }

    #[test]
    fn linear_rejects_non_numeric() {
        let g = fixtures::fig2();
        let gnn = Gnn::new(
            2,
            NeighborMode::Undirected,
            false,
            vec![Layer::Linear(LinearLayer {
                a: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                b: vec![vec![0.0; 2]; 2],
                c: None,
                bias: vec![0.0; 2],
            })],
            Csl::Test(Test::Any),
        )
        .unwrap();
        assert!(matches!(run_layers(&g, &gnn), Err(NeuralError::NonNumeric { .. })));
    }

    #[test]
    fn directed_rules() {
        let g = fixtures::fig2();
        let mut r = Rule::new(2, "1");
        r.incoming = Some(t("f1=person", 2));
        let gnn = Gnn::new(
            2,
            NeighborMode::Directed,
            false,
            vec![Layer::Rule(vec![r.clone()])],
            Csl::Equals { feature: 2, value: "1".into() },
        )
        .unwrap();
        assert_eq!(ids(&g, &classify(&g, &gnn).unwrap()), ["n1", "n4"]);
        let undirected = Gnn::new(2, NeighborMode::Undirected, false, vec![Layer::Rule(vec![r])], Csl::Test(Test::Any));
        assert!(matches!(undirected, Err(NeuralError::DirectionalRule)));
    }

    #[test]
    fn edge_conditions() {
        let g = fixtures::fig2();
        let mut r = Rule::new(2, "1").with_neighbor(Test::Any);
        r.edge = Some(t("f1=rides", 2));
        let gnn = Gnn::new(2, NeighborMode::Undirected, true, vec![Layer::Rule(vec![r.clone()])], Csl::Test(Test::Any))
            .unwrap();
        let snaps = run_layers(&g, &gnn).unwrap();
        assert_eq!(flagged(&snaps[1], 2, "1").len(), 5);
        r.edge = Some(t("f1=walks", 2));
        let gnn = Gnn::new(2, NeighborMode::Undirected, true, vec![Layer::Rule(vec![r.clone()])], Csl::Test(Test::Any))
            .unwrap();
        assert!(flagged(&run_layers(&g, &gnn).unwrap()[1], 2, "1").is_empty());
        assert!(matches!(
            Gnn::new(2, NeighborMode::Undirected, false, vec![Layer::Rule(vec![r])], Csl::Test(Test::Any)),
            Err(NeuralError::EdgeFeaturesOff)
        ));
    }

    #[test]
    fn model_json_errors() {
        let g = fixtures::fig1a();
        assert!(matches!(classify(&g, &fixtures::fig2_gnn()), Err(NeuralError::DimensionMismatch { .. })));
        let bad =
            r#"{"dimension":2,"layers":[{"kind":"rule","rules":[{"set":[3,"1"]}]}],"csl":{"feature":1,"equals":"x"}}"#;
        assert!(matches!(Gnn::from_json(bad), Err(NeuralError::FeatureIndex { index: 3, .. })));
        let bad = r#"{"dimension":2,"layers":[{"kind":"linear","A":[[1]],"B":[[0,0],[0,0]],"b":[0,0]}],"csl":{"feature":1,"equals":"x"}}"#;
        assert!(matches!(Gnn::from_json(bad), Err(NeuralError::Shape { what: "A", .. })));
        let bad = r#"{"dimension":2,"layers":[{"kind":"rule","rules":[{"self":"f3=x","set":[1,"1"]}]}],"csl":{"feature":1,"equals":"x"}}"#;
        assert!(matches!(Gnn::from_json(bad), Err(NeuralError::Test { .. })));
        let ok = r#"{"dimension":2,"layers":[{"kind":"rule","rules":[]}],"csl":{"feature":2,"threshold":0.5}}"#;
        assert!(Gnn::from_json(ok).is_ok());
    }

    #[test]
    fn wl_on_bus_graph() {
        let g = fixtures::fig2();
        let c = wl_colors(&g, 3);
        let ix = |id: &str| g.node_ix(id).unwrap();
        let (n1, n2, n3, n4, n5) = (ix("n1"), ix("n2"), ix("n3"), ix("n4"), ix("n5"));
        assert_eq!(c[0][n1], c[0][n4]);
        assert_ne!(c[0][n2], c[0][n5]);
        for round in &c[1..] {
            assert_ne!(round[n2], round[n5]);
            assert_ne!(round[n1], round[n4]);
        }
        assert_ne!(c[2][n3], c[2][n5]);
    }

    #[test]
    fn wl_symmetric_edges_share_colours() {
        let g = Graph::from_json(
            r#"{"model":"vector","dimension":1,
                "nodes":[{"id":"x","features":["a"]},{"id":"x2","features":["a"]},
                         {"id":"y","features":["b"]},{"id":"y2","features":["b"]}],
                "edges":[{"id":"e","src":"x","dst":"y","features":["r"]},
                         {"id":"f","src":"x2","dst":"y2","features":["r"]}]}"#,
        )
        .unwrap();
        let ix = |id: &str| g.node_ix(id).unwrap();
        for round in wl_colors(&g, 4).iter().chain(&wl_colors_directed(&g, 4)) {
            assert_eq!(round[ix("x")], round[ix("x2")]);
            assert_eq!(round[ix("y")], round[ix("y2")]);
        }
    }
}
