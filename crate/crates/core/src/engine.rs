//! Query evaluation: node selection, path enumeration, reachability, exact
//! and approximate counting, and uniform path generation.
//!
//! Paths are walks: nodes and edges may repeat.

use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::automaton::{compile, determinize, CapExceeded, DeterministicProduct, ProductGraph, VertexIx, DEFAULT_CAP};
use crate::graph::{Graph, NodeIx, Path};
use crate::query::{Regex, Test};

/// Largest accepted path length.
pub const MAX_LENGTH: usize = 1_000_000;

/// Failure probability targeted by the estimator's sample size.
pub const ESTIMATOR_DELTA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    CapExceeded(#[from] CapExceeded),
    #[error("no conforming path of length {0}")]
    EmptySupport(usize),
    #[error("path count does not fit in 128 bits")]
    CountOverflow,
    #[error("epsilon must lie in (0, 1), got {0}")]
    InvalidEpsilon(f64),
    #[error("length {0} exceeds the limit of {MAX_LENGTH}")]
    LengthTooLarge(usize),
}

fn check_len(k: usize) -> Result<(), EngineError> {
    if k > MAX_LENGTH {
        Err(EngineError::LengthTooLarge(k))
    } else {
        Ok(())
    }
}

fn check_epsilon(eps: f64) -> Result<(), EngineError> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(EngineError::InvalidEpsilon(eps))
    }
}

pub(crate) fn build_product<'g>(g: &'g Graph, r: &Regex) -> ProductGraph<'g> {
    ProductGraph::new(g, compile(r), None)
}

/// Nodes satisfying `t`, in id order.
pub fn select_nodes(g: &Graph, t: &Test) -> Vec<NodeIx> {
    g.nodes().filter(|&n| t.matches(g.node(n))).collect()
}

/// `{ start(p) | p ∈ ⟦r⟧ }` by product reachability.
pub fn reachable_from(g: &Graph, r: &Regex) -> BTreeSet<NodeIx> {
    let p = build_product(g, r);
    p.starts().iter().map(|&v| p.node_of(v)).collect()
}

/// `{ (start(p), end(p)) | p ∈ ⟦r⟧ }`, finite even when ⟦r⟧ is not.
pub fn pairs(g: &Graph, r: &Regex) -> BTreeSet<(NodeIx, NodeIx)> {
    let p = build_product(g, r);
    let mut out = BTreeSet::new();
    let mut seen = FixedBitSet::with_capacity(p.vertex_count());
    for &s in p.starts() {
        seen.clear();
        let a = p.node_of(s);
        let mut stack = vec![s];
        seen.insert(s);
        while let Some(v) = stack.pop() {
            if p.is_accepting(v) {
                out.insert((a, p.node_of(v)));
            }
            for st in p.steps(v) {
                if p.is_live(st.target) && !seen.put(st.target) {
                    stack.push(st.target);
                }
            }
        }
    }
    out
}

/// `alive[j]` marks product vertices with an accepting run of exactly `j`
/// more steps.
fn liveness(p: &ProductGraph<'_>, max_len: usize) -> Vec<FixedBitSet> {
    let nv = p.vertex_count();
    let mut alive = Vec::with_capacity(max_len + 1);
    let mut first = FixedBitSet::with_capacity(nv);
    for v in 0..nv {
        first.set(v, p.is_accepting(v));
    }
    alive.push(first);
    for j in 1..=max_len {
        let prev = &alive[j - 1];
        let mut cur = FixedBitSet::with_capacity(nv);
        for v in 0..nv {
            if p.steps(v).iter().any(|s| prev.contains(s.target)) {
                cur.insert(v);
            }
        }
        let empty = cur.is_clear();
        alive.push(cur);
        // once empty, every later layer is empty too
        if empty {
            alive.resize(max_len + 1, FixedBitSet::with_capacity(nv));
            break;
        }
    }
    alive
}

struct Frame {
    node: NodeIx,
    states: FixedBitSet,
    cursor: usize,
}

/// Lazily produced answers of a query, shortest first, then in
/// lexicographic order of `n0 e1 n1 ...` by id.
///
/// Every explored branch is known to lead to an answer, so the work between
/// two emissions is bounded by a polynomial in the graph and query size.
pub struct AnswerStream<'g> {
    product: ProductGraph<'g>,
    alive: Vec<FixedBitSet>,
    max_len: usize,
    length: usize,
    next_start: usize,
    stack: Vec<Frame>,
    path: Path,
}

/// All `p ∈ ⟦r⟧` with `|p| <= max_len`.
pub fn enumerate<'g>(g: &'g Graph, r: &Regex, max_len: usize) -> Result<AnswerStream<'g>, EngineError> {
    check_len(max_len)?;
    let product = build_product(g, r);
    let alive = liveness(&product, max_len);
    Ok(AnswerStream {
        product,
        alive,
        max_len,
        length: 0,
        next_start: 0,
        stack: Vec::new(),
        path: Path { nodes: Vec::new(), edges: Vec::new() },
    })
}

impl AnswerStream<'_> {
    fn any_alive(&self, n: NodeIx, states: &FixedBitSet, remaining: usize) -> bool {
        let layer = &self.alive[remaining];
        states.ones().any(|s| layer.contains(self.product.vertex(n, s)))
    }
}

impl Iterator for AnswerStream<'_> {
    type Item = Path;

    fn next(&mut self) -> Option<Path> {
        let g = self.product.graph();
        let q = self.product.automaton().state_count();
        loop {
            let Some(top) = self.stack.last_mut() else {
                if self.length > self.max_len {
                    return None;
                }
                if self.next_start >= g.node_count() {
                    self.length += 1;
                    self.next_start = 0;
                    continue;
                }
                let n = self.next_start;
                self.next_start += 1;
                let v = self.product.start_vertex(n);
                if !self.alive[self.length].contains(v) {
                    continue;
                }
                if self.length == 0 {
                    return Some(Path::single(n));
                }
                let mut states = FixedBitSet::with_capacity(q);
                states.insert(self.product.automaton().initial());
                self.path.nodes.clear();
                self.path.edges.clear();
                self.path.nodes.push(n);
                self.stack.push(Frame { node: n, states, cursor: 0 });
                continue;
            };
            let traversals = g.traversals(top.node);
            if top.cursor >= traversals.len() {
                self.stack.pop();
                self.path.nodes.pop();
                self.path.edges.pop();
                continue;
            }
            let t = traversals[top.cursor];
            top.cursor += 1;
            let (node, states) = (top.node, top.states.clone());
            let next = self.product.advance(node, &states, t);
            let remaining = self.length - self.path.edges.len() - 1;
            if next.is_clear() || !self.any_alive(t.to, &next, remaining) {
                continue;
            }
            if remaining == 0 {
                let mut out = self.path.clone();
                out.nodes.push(t.to);
                out.edges.push(t.edge);
                return Some(out);
            }
            self.path.nodes.push(t.to);
            self.path.edges.push(t.edge);
            self.stack.push(Frame { node: t.to, states: next, cursor: 0 });
        }
    }
}

/// Input of the counting problem.
#[derive(Debug, Clone, Copy)]
pub struct CountRequest<'a> {
    pub graph: &'a Graph,
    pub regex: &'a Regex,
    pub k: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub cap: usize,
}

impl<'a> CountRequest<'a> {
    pub fn new(graph: &'a Graph, regex: &'a Regex, k: usize) -> Self {
        CountRequest { graph, regex, k, epsilon: 0.1, seed: 0, cap: DEFAULT_CAP }
    }

    pub fn epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }
}

/// Output of the approximate counter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub estimate: f64,
    pub samples: usize,
    pub epsilon: f64,
}

fn add(a: u128, b: u128) -> Result<u128, EngineError> {
    a.checked_add(b).ok_or(EngineError::CountOverflow)
}

/// Paths of length `j` from each deterministic vertex to acceptance, for
/// `j = 0..=k`.
fn path_layers(d: &DeterministicProduct, k: usize) -> Result<Vec<Vec<u128>>, EngineError> {
    let nv = d.vertex_count();
    let mut layers = Vec::with_capacity(k + 1);
    layers.push((0..nv).map(|v| d.is_accepting(v) as u128).collect::<Vec<_>>());
    for j in 1..=k {
        let prev = &layers[j - 1];
        let mut cur = vec![0u128; nv];
        for (v, slot) in cur.iter_mut().enumerate() {
            for s in d.steps(v) {
                *slot = add(*slot, prev[s.target])?;
            }
        }
        layers.push(cur);
    }
    Ok(layers)
}

/// Accepting runs of length `j` from each product vertex, optionally only
/// those ending at node `end`.
pub(crate) fn run_layers(p: &ProductGraph<'_>, k: usize, end: Option<NodeIx>) -> Result<Vec<Vec<u128>>, EngineError> {
    let nv = p.vertex_count();
    let mut layers = Vec::with_capacity(k + 1);
    layers.push(
        (0..nv).map(|v| (p.is_accepting(v) && end.is_none_or(|b| p.node_of(v) == b)) as u128).collect::<Vec<_>>(),
    );
    for j in 1..=k {
        let prev = &layers[j - 1];
        let mut cur = vec![0u128; nv];
        for (v, slot) in cur.iter_mut().enumerate() {
            for s in p.steps(v) {
                *slot = add(*slot, prev[s.target])?;
            }
        }
        layers.push(cur);
    }
    Ok(layers)
}

/// `Count(G, r, k)` exactly, via the deterministic product.
pub fn count_exact(req: &CountRequest<'_>) -> Result<u128, EngineError> {
    check_len(req.k)?;
    let p = build_product(req.graph, req.regex);
    let d = determinize(&p, req.cap)?;
    let nv = d.vertex_count();
    let mut cur: Vec<u128> = (0..nv).map(|v| d.is_accepting(v) as u128).collect();
    for _ in 0..req.k {
        let mut next = vec![0u128; nv];
        for (v, slot) in next.iter_mut().enumerate() {
            for s in d.steps(v) {
                *slot = add(*slot, cur[s.target])?;
            }
        }
        cur = next;
    }
    req.graph.nodes().filter_map(|n| d.start(n)).try_fold(0u128, |acc, v| add(acc, cur[v]))
}

/// Samples drawn by the estimator for a target relative error `epsilon`.
pub fn estimator_samples(epsilon: f64) -> usize {
    (8.0 / (epsilon * epsilon) * (1.0 / ESTIMATOR_DELTA).ln()).ceil() as usize
}

fn pick<R: Rng>(rng: &mut R, total: u128, weights: impl Iterator<Item = u128>) -> usize {
    let mut x = rng.gen_range(0..total);
    for (i, w) in weights.enumerate() {
        if x < w {
            return i;
        }
        x -= w;
    }
    unreachable!("weights sum to total")
}

/// Draws one accepting run of exactly `k` steps from `start`, uniformly
/// among such runs, and returns the path it reads.
pub(crate) fn sample_run<R: Rng>(
    p: &ProductGraph<'_>,
    layers: &[Vec<u128>],
    start: VertexIx,
    k: usize,
    rng: &mut R,
) -> Path {
    let mut v = start;
    let mut path = Path::single(p.node_of(v));
    for remaining in (1..=k).rev() {
        let steps = p.steps(v);
        let prev = &layers[remaining - 1];
        let total = layers[remaining][v];
        let i = pick(rng, total, steps.iter().map(|s| prev[s.target]));
        let s = steps[i];
        path.edges.push(s.edge);
        path.nodes.push(p.node_of(s.target));
        v = s.target;
    }
    path
}

/// Unbiased estimate of `Count(G, r, k)`.
///
/// Runs of the (possibly ambiguous) product are sampled uniformly from exact
/// run counts; a sampled path `p` read by `amb(p)` runs contributes
/// `1 / amb(p)`, and the estimate is the run total times the mean
/// contribution. The sample size targets relative error `epsilon` with
/// probability 0.95 in practice, not a proven bound.
pub fn count_approx(req: &CountRequest<'_>) -> Result<Estimate, EngineError> {
    check_len(req.k)?;
    check_epsilon(req.epsilon)?;
    let p = build_product(req.graph, req.regex);
    let layers = run_layers(&p, req.k, None)?;
    let starts: Vec<VertexIx> = req.graph.nodes().map(|n| p.start_vertex(n)).collect();
    let total = starts.iter().try_fold(0u128, |acc, &v| add(acc, layers[req.k][v]))?;
    if total == 0 {
        return Ok(Estimate { estimate: 0.0, samples: 0, epsilon: req.epsilon });
    }
    let samples = estimator_samples(req.epsilon);
    let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
    let mut acc = 0.0;
    for _ in 0..samples {
        let i = pick(&mut rng, total, starts.iter().map(|&v| layers[req.k][v]));
        let path = sample_run(&p, &layers, starts[i], req.k, &mut rng);
        let amb = p.ambiguity(&path.nodes, &path.edges);
        debug_assert!(amb >= 1);
        acc += 1.0 / amb as f64;
    }
    Ok(Estimate { estimate: total as f64 * acc / samples as f64, samples, epsilon: req.epsilon })
}

enum SamplerTables {
    Exact { det: DeterministicProduct, layers: Vec<Vec<u128>>, starts: Vec<usize> },
    Rejection { layers: Vec<Vec<u128>>, starts: Vec<VertexIx> },
}

/// Uniform generator over `{ p ∈ ⟦r⟧ : |p| = k }`.
///
/// Preparation builds count tables once; each [`Sampler::draw`] is then a
/// single weighted walk. With a deterministic product the walk is exactly
/// uniform over paths; otherwise runs are sampled and accepted with
/// probability `1 / amb(p)`, which is again uniform over paths.
pub struct Sampler<'g> {
    product: ProductGraph<'g>,
    tables: SamplerTables,
    total: u128,
    k: usize,
    rng: ChaCha8Rng,
}

pub fn prepare_sampler<'g>(g: &'g Graph, r: &Regex, k: usize, seed: u64) -> Result<Sampler<'g>, EngineError> {
    prepare_sampler_with_cap(g, r, k, seed, DEFAULT_CAP)
}

pub fn prepare_sampler_with_cap<'g>(
    g: &'g Graph,
    r: &Regex,
    k: usize,
    seed: u64,
    cap: usize,
) -> Result<Sampler<'g>, EngineError> {
    check_len(k)?;
    let product = build_product(g, r);
    let (tables, total) = match determinize(&product, cap) {
        Ok(det) => {
            let layers = path_layers(&det, k)?;
            let starts: Vec<usize> = g.nodes().filter_map(|n| det.start(n)).collect();
            let total = starts.iter().try_fold(0u128, |acc, &v| add(acc, layers[k][v]))?;
            (SamplerTables::Exact { det, layers, starts }, total)
        }
        Err(CapExceeded(_)) => {
            let layers = run_layers(&product, k, None)?;
            let starts: Vec<VertexIx> = g.nodes().map(|n| product.start_vertex(n)).collect();
            let total = starts.iter().try_fold(0u128, |acc, &v| add(acc, layers[k][v]))?;
            (SamplerTables::Rejection { layers, starts }, total)
        }
    };
    if total == 0 {
        return Err(EngineError::EmptySupport(k));
    }
    Ok(Sampler { product, tables, total, k, rng: ChaCha8Rng::seed_from_u64(seed) })
}

impl Sampler<'_> {
    /// Whether draws come from the deterministic product.
    pub fn is_exact(&self) -> bool {
        matches!(self.tables, SamplerTables::Exact { .. })
    }

    pub fn draw(&mut self) -> Path {
        let k = self.k;
        match &self.tables {
            SamplerTables::Exact { det, layers, starts } => {
                let i = pick(&mut self.rng, self.total, starts.iter().map(|&v| layers[k][v]));
                let mut v = starts[i];
                let mut path = Path::single(det.node_of(v));
                for remaining in (1..=k).rev() {
                    let steps = det.steps(v);
                    let prev = &layers[remaining - 1];
                    let j = pick(&mut self.rng, layers[remaining][v], steps.iter().map(|s| prev[s.target]));
                    path.edges.push(steps[j].edge);
                    path.nodes.push(steps[j].to_node);
                    v = steps[j].target;
                }
                path
            }
            SamplerTables::Rejection { layers, starts } => loop {
                let i = pick(&mut self.rng, self.total, starts.iter().map(|&v| layers[k][v]));
                let path = sample_run(&self.product, layers, starts[i], k, &mut self.rng);
                let amb = self.product.ambiguity(&path.nodes, &path.edges);
                if self.rng.gen::<f64>() * (amb as f64) < 1.0 {
                    return path;
                }
            },
        }
    }
}
