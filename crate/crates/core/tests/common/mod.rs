//! Random instances and brute-force oracles shared by the integration tests.
//!
//! The oracles work from the definitions directly: path sets are built by
//! structural recursion over the expression, shortest paths by walking every
//! walk of the right length. None of them go through the automaton.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use gqe_core::graph::{EdgeDoc, GraphDoc, Model, NodeDoc};
use gqe_core::neural::{run_layers, wl_colors, wl_colors_directed, Csl, Gnn, Layer, LinearLayer, NeighborMode, Rule};
use gqe_core::query::Test;
use gqe_core::xai::{all_instances, DecisionModel, Instance};
use gqe_core::{Graph, Path, Regex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub const NODE_LABELS: [&str; 3] = ["a", "b", "c"];
pub const EDGE_LABELS: [&str; 2] = ["r", "s"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn node(id: String, label: &str) -> NodeDoc {
    NodeDoc { id, label: Some(label.into()), ..Default::default() }
}

fn edge(id: String, src: String, dst: String, label: &str) -> EdgeDoc {
    EdgeDoc { id, src, dst, label: Some(label.into()), ..Default::default() }
}

/// Labeled multigraph with up to `max_nodes` nodes; self-loops and
/// parallel edges included.
pub fn random_labeled(rng: &mut ChaCha8Rng, max_nodes: usize, max_edges: usize) -> Graph {
    let n = rng.gen_range(1..=max_nodes);
    let m = rng.gen_range(0..=max_edges);
    let mut doc = GraphDoc::new(Model::Labeled);
    for i in 0..n {
        doc.nodes.push(node(format!("v{i}"), NODE_LABELS.choose(rng).unwrap()));
    }
    for j in 0..m {
        let (s, t) = (rng.gen_range(0..n), rng.gen_range(0..n));
        doc.edges.push(edge(format!("e{j:02}"), format!("v{s}"), format!("v{t}"), EDGE_LABELS.choose(rng).unwrap()));
    }
    Graph::try_from(doc).expect("generated graph is valid")
}

/// Same graph with every node and edge id replaced through a random
/// bijection; returns the graph and the old-to-new id map for nodes and
/// edges.
pub fn rename(g: &Graph, rng: &mut ChaCha8Rng) -> (Graph, BTreeMap<String, String>) {
    let mut doc = g.to_doc();
    let mut fresh: Vec<usize> = (0..doc.nodes.len()).collect();
    fresh.shuffle(rng);
    let mut map: BTreeMap<String, String> =
        doc.nodes.iter().zip(&fresh).map(|(n, i)| (n.id.clone(), format!("w{i:03}"))).collect();
    for n in &mut doc.nodes {
        n.id = map[&n.id].clone();
    }
    let mut edge_ids: Vec<usize> = (0..doc.edges.len()).collect();
    edge_ids.shuffle(rng);
    for (e, i) in doc.edges.iter_mut().zip(edge_ids) {
        let id = format!("f{i:03}");
        map.insert(std::mem::replace(&mut e.id, id.clone()), id);
        e.src = map[&e.src].clone();
        e.dst = map[&e.dst].clone();
    }
    (Graph::try_from(doc).unwrap(), map)
}

pub fn random_test(rng: &mut ChaCha8Rng, labels: &[&str], depth: usize) -> Test {
    let roll = rng.gen_range(0..10);
    if depth == 0 || roll < 6 {
        return if rng.gen_bool(0.15) { Test::Any } else { Test::label(*labels.choose(rng).unwrap()) };
    }
    match roll {
        6 | 7 => Test::not(random_test(rng, labels, depth - 1)),
        8 => Test::and(random_test(rng, labels, depth - 1), random_test(rng, labels, depth - 1)),
        _ => Test::or(random_test(rng, labels, depth - 1), random_test(rng, labels, depth - 1)),
    }
}

/// Expression of depth at most `depth` over [`NODE_LABELS`] and
/// [`EDGE_LABELS`].
pub fn random_regex(rng: &mut ChaCha8Rng, depth: usize, star: bool) -> Regex {
    let leaf = depth <= 1 || rng.gen_bool(0.3);
    if leaf {
        return match rng.gen_range(0..3) {
            0 => Regex::Node(random_test(rng, &NODE_LABELS, 1)),
            1 => Regex::Fwd(random_test(rng, &EDGE_LABELS, 1)),
            _ => Regex::Bwd(random_test(rng, &EDGE_LABELS, 1)),
        };
    }
    let kinds = if star { 3 } else { 2 };
    match rng.gen_range(0..kinds) {
        0 => Regex::seq(random_regex(rng, depth - 1, star), random_regex(rng, depth - 1, star)),
        1 => Regex::alt(random_regex(rng, depth - 1, star), random_regex(rng, depth - 1, star)),
        _ => Regex::star(random_regex(rng, depth - 1, star)),
    }
}

fn path_of(nodes: Vec<usize>, edges: Vec<usize>) -> Path {
    Path { nodes, edges }
}

/// Every path in `⟦r⟧` of length at most `k`, from the definition.
pub fn semantics(g: &Graph, r: &Regex, k: usize) -> BTreeSet<Path> {
    match r {
        Regex::Node(t) => g.nodes().filter(|&n| t.matches(g.node(n))).map(Path::single).collect(),
        Regex::Fwd(t) | Regex::Bwd(t) => {
            if k == 0 {
                return BTreeSet::new();
            }
            let forward = matches!(r, Regex::Fwd(_));
            (0..g.edge_count())
                .filter(|&e| t.matches(g.edge(e)))
                .map(|e| {
                    let (s, d) = g.endpoints(e);
                    if forward {
                        path_of(vec![s, d], vec![e])
                    } else {
                        path_of(vec![d, s], vec![e])
                    }
                })
                .collect()
        }
        Regex::Alt(a, b) => {
            let mut out = semantics(g, a, k);
            out.extend(semantics(g, b, k));
            out
        }
        Regex::Seq(a, b) => concat(&semantics(g, a, k), &semantics(g, b, k), k),
        Regex::Star(a) => {
            let base = semantics(g, a, k);
            let mut out: BTreeSet<Path> = g.nodes().map(Path::single).collect();
            loop {
                let next = concat(&out, &base, k);
                let before = out.len();
                out.extend(next);
                if out.len() == before {
                    return out;
                }
            }
        }
    }
}

fn concat(left: &BTreeSet<Path>, right: &BTreeSet<Path>, k: usize) -> BTreeSet<Path> {
    let mut by_start: BTreeMap<usize, Vec<&Path>> = BTreeMap::new();
    for p in right {
        by_start.entry(p.nodes[0]).or_default().push(p);
    }
    let mut out = BTreeSet::new();
    for p in left {
        let end = *p.nodes.last().unwrap();
        for q in by_start.get(&end).into_iter().flatten() {
            if p.edges.len() + q.edges.len() <= k {
                let mut nodes = p.nodes.clone();
                nodes.extend(&q.nodes[1..]);
                let mut edges = p.edges.clone();
                edges.extend(&q.edges);
                out.insert(path_of(nodes, edges));
            }
        }
    }
    out
}

/// `{ (start(p), end(p)) | p ∈ ⟦r⟧ }` by relation algebra: composition for
/// concatenation, reflexive-transitive closure for the star.
pub fn endpoint_relation(g: &Graph, r: &Regex) -> BTreeSet<(usize, usize)> {
    match r {
        Regex::Node(t) => g.nodes().filter(|&n| t.matches(g.node(n))).map(|n| (n, n)).collect(),
        Regex::Fwd(t) => (0..g.edge_count()).filter(|&e| t.matches(g.edge(e))).map(|e| g.endpoints(e)).collect(),
        Regex::Bwd(t) => (0..g.edge_count())
            .filter(|&e| t.matches(g.edge(e)))
            .map(|e| {
                let (s, d) = g.endpoints(e);
                (d, s)
            })
            .collect(),
        Regex::Alt(a, b) => {
            let mut out = endpoint_relation(g, a);
            out.extend(endpoint_relation(g, b));
            out
        }
        Regex::Seq(a, b) => compose(&endpoint_relation(g, a), &endpoint_relation(g, b)),
        Regex::Star(a) => {
            let step = endpoint_relation(g, a);
            let mut out: BTreeSet<(usize, usize)> = g.nodes().map(|n| (n, n)).collect();
            loop {
                let next = compose(&out, &step);
                let before = out.len();
                out.extend(next);
                if out.len() == before {
                    return out;
                }
            }
        }
    }
}

fn compose(a: &BTreeSet<(usize, usize)>, b: &BTreeSet<(usize, usize)>) -> BTreeSet<(usize, usize)> {
    a.iter().flat_map(|&(x, y)| b.range((y, 0)..=(y, usize::MAX)).map(move |&(_, z)| (x, z))).collect()
}

pub fn brute_count(g: &Graph, r: &Regex, k: usize) -> u128 {
    semantics(g, r, k).iter().filter(|p| p.edges.len() == k).count() as u128
}

/// Answers with at most `k` edges in the engine's order: by length, then by
/// the interleaved node/edge indices.
pub fn brute_enumeration(g: &Graph, r: &Regex, k: usize) -> Vec<Path> {
    let mut all: Vec<Path> = semantics(g, r, k).into_iter().collect();
    all.sort_by_key(|p| {
        let mut key = vec![p.nodes[0]];
        for (e, n) in p.edges.iter().zip(&p.nodes[1..]) {
            key.push(*e);
            key.push(*n);
        }
        (p.edges.len(), key)
    });
    all
}

/// All directed walks from `a` with exactly `len` edges.
fn walks(g: &Graph, a: usize, len: usize) -> Vec<Path> {
    let mut out = Vec::new();
    let mut stack = vec![Path::single(a)];
    while let Some(p) = stack.pop() {
        if p.edges.len() == len {
            out.push(p);
            continue;
        }
        let u = *p.nodes.last().unwrap();
        for &e in g.out_edges(u) {
            let mut q = p.clone();
            q.edges.push(e);
            q.nodes.push(g.endpoints(e).1);
            stack.push(q);
        }
    }
    out
}

/// Betweenness from its definition: for each pair, list every shortest
/// walk explicitly.
pub fn brute_bc(g: &Graph, x: usize) -> f64 {
    let n = g.node_count();
    let mut total = 0.0;
    for a in 0..n {
        for b in 0..n {
            if a == b || a == x || b == x {
                continue;
            }
            for len in 1..n {
                let hits: Vec<Path> = walks(g, a, len).into_iter().filter(|p| p.end() == b).collect();
                if !hits.is_empty() {
                    let through = hits.iter().filter(|p| p.nodes.contains(&x)).count();
                    total += through as f64 / hits.len() as f64;
                    break;
                }
            }
        }
    }
    total
}

/// Regex-restricted betweenness from the path sets, searching lengths up
/// to `max_len`.
pub fn brute_bc_r(g: &Graph, x: usize, r: &Regex, max_len: usize) -> f64 {
    let paths = semantics(g, r, max_len);
    let n = g.node_count();
    let mut total = 0.0;
    for a in 0..n {
        for b in 0..n {
            if a == b || a == x || b == x {
                continue;
            }
            let pair: Vec<&Path> = paths.iter().filter(|p| p.start() == a && p.end() == b).collect();
            let Some(min) = pair.iter().map(|p| p.edges.len()).min() else {
                continue;
            };
            let shortest: Vec<&&Path> = pair.iter().filter(|p| p.edges.len() == min).collect();
            let through = shortest.iter().filter(|p| p.nodes.contains(&x)).count();
            total += through as f64 / shortest.len() as f64;
        }
    }
    total
}

/// Upper-tail p-value of Pearson's statistic for `observed` against a
/// uniform distribution over its cells.
pub fn chi_square_uniform(observed: &[u64]) -> f64 {
    let total: u64 = observed.iter().sum();
    let expected = total as f64 / observed.len() as f64;
    let stat: f64 = observed.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
    let dist = ChiSquared::new((observed.len() - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

pub const VECTOR_F1: [&str; 3] = ["person", "bus", "infected"];

fn vnode(id: String, features: &[&str]) -> NodeDoc {
    NodeDoc { id, features: Some(features.iter().map(|f| Some(f.to_string())).collect()), ..Default::default() }
}

fn vedge(id: String, src: String, dst: String, features: &[&str]) -> EdgeDoc {
    EdgeDoc {
        id,
        src,
        dst,
        features: Some(features.iter().map(|f| Some(f.to_string())).collect()),
        ..Default::default()
    }
}

/// Dimension-2 graph with riders (`person`/`infected`) and buses, every
/// edge a `rides` edge from a rider to a bus, second feature `0`.
pub fn random_bus_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> Graph {
    let n = rng.gen_range(2..=max_nodes);
    let kinds: Vec<&str> = (0..n).map(|_| *VECTOR_F1.choose(rng).unwrap()).collect();
    let mut doc = GraphDoc::new(Model::Vector);
    doc.dimension = Some(2);
    for (i, k) in kinds.iter().enumerate() {
        doc.nodes.push(vnode(format!("v{i}"), &[k, "0"]));
    }
    let riders: Vec<usize> = (0..n).filter(|&i| kinds[i] != "bus").collect();
    let buses: Vec<usize> = (0..n).filter(|&i| kinds[i] == "bus").collect();
    if !riders.is_empty() && !buses.is_empty() {
        for j in 0..rng.gen_range(0..=2 * n) {
            let s = *riders.choose(rng).unwrap();
            let t = *buses.choose(rng).unwrap();
            doc.edges.push(vedge(format!("e{j:02}"), format!("v{s}"), format!("v{t}"), &["rides", "0"]));
        }
    }
    Graph::try_from(doc).unwrap()
}

/// Dimension-`d` graph whose features are drawn from `values`, with random
/// directed edges.
pub fn random_vector_graph(rng: &mut ChaCha8Rng, max_nodes: usize, d: usize, values: &[&str]) -> Graph {
    let n = rng.gen_range(1..=max_nodes);
    let mut doc = GraphDoc::new(Model::Vector);
    doc.dimension = Some(d);
    for i in 0..n {
        let f: Vec<&str> = (0..d).map(|_| *values.choose(rng).unwrap()).collect();
        doc.nodes.push(vnode(format!("v{i}"), &f));
    }
    for j in 0..rng.gen_range(0..=2 * n) {
        let (s, t) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let f: Vec<&str> = (0..d).map(|_| *values.choose(rng).unwrap()).collect();
        doc.edges.push(vedge(format!("e{j:02}"), format!("v{s}"), format!("v{t}"), &f));
    }
    Graph::try_from(doc).unwrap()
}

/// Random read-once decision model over at most `max_vars` variables.
/// Subtrees end in two shared leaves, so the result is a DAG.
pub fn random_decision_model(rng: &mut ChaCha8Rng, max_vars: usize) -> DecisionModel {
    let vars: Vec<String> = (0..rng.gen_range(1..=max_vars)).map(|i| format!("x{i}")).collect();
    let mut doc = GraphDoc::new(Model::Labeled);
    doc.nodes.push(node("leaf0".into(), "0"));
    doc.nodes.push(node("leaf1".into(), "1"));
    let mut counter = 0;
    let root = grow(rng, &vars, &mut doc, &mut counter, 0);
    let mut value = serde_json::to_value(&doc).unwrap();
    value["root"] = serde_json::Value::from(root);
    DecisionModel::from_json(&value.to_string()).expect("generated model is valid")
}

fn grow(rng: &mut ChaCha8Rng, free: &[String], doc: &mut GraphDoc, counter: &mut usize, depth: usize) -> String {
    if free.is_empty() || (depth > 0 && rng.gen_bool(0.25)) {
        return if rng.gen_bool(0.5) { "leaf1".into() } else { "leaf0".into() };
    }
    let i = rng.gen_range(0..free.len());
    let var = free[i].clone();
    let rest: Vec<String> = free.iter().filter(|v| **v != var).cloned().collect();
    let id = format!("d{counter:03}");
    *counter += 1;
    doc.nodes.push(node(id.clone(), &var));
    for bit in ["0", "1"] {
        let child = grow(rng, &rest, doc, counter, depth + 1);
        let eid = format!("{id}-{bit}");
        doc.edges.push(edge(eid, id.clone(), child, bit));
    }
    id
}

/// Every completion of `partial` over `vars`.
pub fn completions<'a>(vars: &'a [String], partial: &'a Instance) -> impl Iterator<Item = Instance> + 'a {
    all_instances(vars).filter(move |inst| partial.iter().all(|(k, v)| inst[k] == *v))
}

/// All partial instances over `vars`, as maps.
pub fn all_partials(vars: &[String]) -> Vec<Instance> {
    let mut out = vec![Instance::new()];
    for v in vars {
        let mut next = Vec::new();
        for p in &out {
            next.push(p.clone());
            for b in [false, true] {
                let mut q = p.clone();
                q.insert(v.clone(), b);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// Dimension-2 graph over the bus vocabulary with a 0/1 flag in the second
/// feature and edges in arbitrary directions.
pub fn random_vocab_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> Graph {
    let n = rng.gen_range(1..=max_nodes);
    let mut doc = GraphDoc::new(Model::Vector);
    doc.dimension = Some(2);
    for i in 0..n {
        let f1 = *VECTOR_F1.choose(rng).unwrap();
        let f2 = if rng.gen_bool(0.3) { "1" } else { "0" };
        doc.nodes.push(vnode(format!("v{i}"), &[f1, f2]));
    }
    for j in 0..rng.gen_range(0..=2 * n) {
        let (s, t) = (rng.gen_range(0..n), rng.gen_range(0..n));
        doc.edges.push(vedge(format!("e{j:02}"), format!("v{s}"), format!("v{t}"), &["rides", "0"]));
    }
    Graph::try_from(doc).unwrap()
}

fn vocab_test(rng: &mut ChaCha8Rng) -> Test {
    let atom = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.6) {
            Test::FeatEq(1, VECTOR_F1.choose(rng).unwrap().to_string())
        } else {
            Test::FeatEq(2, if rng.gen_bool(0.5) { "1" } else { "0" }.into())
        }
    };
    match rng.gen_range(0..4) {
        0 => Test::and(atom(rng), atom(rng)),
        1 => Test::not(atom(rng)),
        _ => atom(rng),
    }
}

/// Rule network over the bus vocabulary; `directed` adds `out`/`in`
/// conditions.
pub fn random_rule_gnn(rng: &mut ChaCha8Rng, directed: bool) -> Gnn {
    let mut layers = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let mut rules = Vec::new();
        for _ in 0..rng.gen_range(0..=3) {
            let value = if rng.gen_bool(0.5) { "1" } else { "0" };
            let mut r = Rule::new(2, value);
            if rng.gen_bool(0.7) {
                r.own = Some(vocab_test(rng));
            }
            if rng.gen_bool(0.7) {
                r.neighbor = Some(vocab_test(rng));
            }
            if directed && rng.gen_bool(0.5) {
                r.out = Some(vocab_test(rng));
            }
            if directed && rng.gen_bool(0.5) {
                r.incoming = Some(vocab_test(rng));
            }
            rules.push(r);
        }
        layers.push(Layer::Rule(rules));
    }
    let mode = if directed { NeighborMode::Directed } else { NeighborMode::Undirected };
    Gnn::new(2, mode, false, layers, Csl::Test(vocab_test(rng))).unwrap()
}

fn small_matrix(rng: &mut ChaCha8Rng, d: usize) -> Vec<Vec<f64>> {
    (0..d).map(|_| (0..d).map(|_| rng.gen_range(-2..=2) as f64 * 0.5).collect()).collect()
}

/// Linear network for 0/1 graphs of dimension `d`.
pub fn random_linear_gnn(rng: &mut ChaCha8Rng, d: usize, directed: bool) -> Gnn {
    let layers = (0..rng.gen_range(1..=3))
        .map(|_| {
            Layer::Linear(LinearLayer {
                a: small_matrix(rng, d),
                b: small_matrix(rng, d),
                c: directed.then(|| small_matrix(rng, d)),
                bias: (0..d).map(|_| rng.gen_range(-1..=1) as f64 * 0.5).collect(),
            })
        })
        .collect();
    let mode = if directed { NeighborMode::Directed } else { NeighborMode::Undirected };
    Gnn::new(d, mode, false, layers, Csl::Threshold { feature: 1, threshold: 0.5 }).unwrap()
}

/// Counterexamples to "same colour at round t implies same vector at
/// layer t", as `(layer, u, v)`.
pub fn wl_violations(g: &Graph, gnn: &Gnn) -> Vec<(usize, usize, usize)> {
    let snaps = run_layers(g, gnn).unwrap();
    let rounds = snaps.len() - 1;
    let colors = match gnn.direction() {
        NeighborMode::Undirected => wl_colors(g, rounds),
        NeighborMode::Directed => wl_colors_directed(g, rounds),
    };
    let mut out = Vec::new();
    for (t, snap) in snaps.iter().enumerate() {
        for u in g.nodes() {
            for v in g.nodes().filter(|&v| v > u) {
                if colors[t][u] == colors[t][v] && snap[u] != snap[v] {
                    out.push((t, u, v));
                }
            }
        }
    }
    out
}
