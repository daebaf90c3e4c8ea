//! Betweenness centrality, plain and restricted to paths conforming to a
//! path expression.
//!
//! Both sums run over ordered pairs `(a, b)` with `a`, `b` and `x` pairwise
//! distinct. A pair without any (conforming) path contributes nothing.

use std::cmp::Ordering;
use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::automaton::{compile, determinize, DeterministicProduct, PathAutomaton, ProductGraph, DEFAULT_CAP};
use crate::engine::{estimator_samples, run_layers, sample_run, EngineError};
use crate::graph::{Graph, NodeIx};
use crate::query::Regex;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

impl From<crate::automaton::CapExceeded> for AnalyticsError {
    fn from(e: crate::automaton::CapExceeded) -> Self {
        AnalyticsError::Engine(e.into())
    }
}

fn resolve(g: &Graph, x: &str) -> Result<NodeIx, AnalyticsError> {
    g.node_ix(x).ok_or_else(|| AnalyticsError::UnknownNode(x.to_string()))
}

/// Shortest-path distances and path counts from one source.
struct Sssp {
    dist: Vec<Option<usize>>,
    sigma: Vec<f64>,
}

fn sssp(g: &Graph, a: NodeIx) -> Sssp {
    let n = g.node_count();
    let mut dist = vec![None; n];
    let mut sigma = vec![0.0; n];
    dist[a] = Some(0);
    sigma[a] = 1.0;
    let mut queue = VecDeque::from([a]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].expect("queued nodes have a distance");
        for &e in g.out_edges(u) {
            let v = g.endpoints(e).1;
            match dist[v] {
                None => {
                    dist[v] = Some(du + 1);
                    sigma[v] = sigma[u];
                    queue.push_back(v);
                }
                Some(dv) if dv == du + 1 => sigma[v] += sigma[u],
                Some(_) => {}
            }
        }
    }
    Sssp { dist, sigma }
}

fn bc_from(tables: &[Sssp], x: NodeIx) -> f64 {
    let n = tables.len();
    let mut total = 0.0;
    for a in (0..n).filter(|&a| a != x) {
        let ta = &tables[a];
        let Some(dax) = ta.dist[x] else { continue };
        for b in (0..n).filter(|&b| b != a && b != x) {
            let (Some(dab), Some(dxb)) = (ta.dist[b], tables[x].dist[b]) else {
                continue;
            };
            if dax + dxb == dab {
                total += ta.sigma[x] * tables[x].sigma[b] / ta.sigma[b];
            }
        }
    }
    total
}

fn all_sssp(g: &Graph) -> Vec<Sssp> {
    (0..g.node_count()).into_par_iter().map(|a| sssp(g, a)).collect()
}

/// Directed betweenness of `x`; parallel edges give distinct paths.
pub fn bc(g: &Graph, x: &str) -> Result<f64, AnalyticsError> {
    let x = resolve(g, x)?;
    Ok(bc_from(&all_sssp(g), x))
}

/// [`bc`] for every node, indexed by node.
pub fn bc_all(g: &Graph) -> Vec<f64> {
    let tables = all_sssp(g);
    g.nodes().map(|x| bc_from(&tables, x)).collect()
}

fn add(a: u128, b: u128) -> Result<u128, EngineError> {
    a.checked_add(b).ok_or(EngineError::CountOverflow)
}

/// Paths from `start` of exactly `j` steps that end accepting at each
/// node, for `j = 0..=max`.
fn forward_counts(d: &DeterministicProduct, n: usize, start: usize, max: usize) -> Result<Vec<Vec<u128>>, EngineError> {
    let mut layer = vec![0u128; d.vertex_count()];
    layer[start] = 1;
    let mut out = Vec::with_capacity(max + 1);
    for j in 0..=max {
        let mut at = vec![0u128; n];
        for (v, &c) in layer.iter().enumerate() {
            if c > 0 && d.is_accepting(v) {
                at[d.node_of(v)] = add(at[d.node_of(v)], c)?;
            }
        }
        out.push(at);
        if j == max {
            break;
        }
        let mut next = vec![0u128; d.vertex_count()];
        for (v, &c) in layer.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for s in d.steps(v) {
                next[s.target] = add(next[s.target], c)?;
            }
        }
        layer = next;
    }
    Ok(out)
}

/// Minimal conforming length from `a` to every node, by product BFS.
fn min_lengths(p: &ProductGraph<'_>, a: NodeIx) -> Vec<Option<usize>> {
    let n = p.graph().node_count();
    let mut best = vec![None; n];
    let mut dist = vec![usize::MAX; p.vertex_count()];
    let s = p.start_vertex(a);
    if !p.is_live(s) {
        return best;
    }
    dist[s] = 0;
    let mut queue = VecDeque::from([s]);
    while let Some(v) = queue.pop_front() {
        let node = p.node_of(v);
        if p.is_accepting(v) && best[node].is_none() {
            best[node] = Some(dist[v]);
        }
        for st in p.steps(v) {
            if p.is_live(st.target) && dist[st.target] == usize::MAX {
                dist[st.target] = dist[v] + 1;
                queue.push_back(st.target);
            }
        }
    }
    best
}

/// Per-pair minimal lengths and shortest conforming path counts from `a`.
struct PairCounts {
    len: Vec<Option<usize>>,
    total: Vec<u128>,
}

fn pair_counts(p: &ProductGraph<'_>, d: &DeterministicProduct, a: NodeIx) -> Result<PairCounts, EngineError> {
    let n = p.graph().node_count();
    let len = min_lengths(p, a);
    let mut total = vec![0; n];
    if let (Some(max), Some(start)) = (len.iter().flatten().max(), d.start(a)) {
        let counts = forward_counts(d, n, start, *max)?;
        for b in 0..n {
            if let Some(l) = len[b] {
                total[b] = counts[l][b];
            }
        }
    }
    Ok(PairCounts { len, total })
}

fn bc_r_from(
    g: &Graph,
    automaton: &PathAutomaton,
    full: &[PairCounts],
    x: NodeIx,
    cap: usize,
) -> Result<f64, AnalyticsError> {
    let without = ProductGraph::new(g, automaton.clone(), Some(x));
    let d = determinize(&without, cap)?;
    let n = g.node_count();
    let terms: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|a| -> Result<f64, EngineError> {
            if a == x {
                return Ok(0.0);
            }
            let pc = &full[a];
            let max = (0..n).filter(|&b| b != a && b != x && pc.total[b] > 0).filter_map(|b| pc.len[b]).max();
            let (Some(max), Some(start)) = (max, d.start(a)) else {
                return Ok(0.0);
            };
            let avoiding = forward_counts(&d, n, start, max)?;
            let mut sum = 0.0;
            for b in (0..n).filter(|&b| b != a && b != x) {
                let (Some(l), s) = (pc.len[b], pc.total[b]) else { continue };
                if s == 0 {
                    continue;
                }
                let rest = avoiding[l][b];
                assert!(rest <= s, "deleting a node cannot add paths");
                sum += (s - rest) as f64 / s as f64;
            }
            Ok(sum)
        })
        .collect::<Result<_, _>>()?;
    Ok(terms.into_iter().sum())
}

fn full_counts(g: &Graph, automaton: &PathAutomaton, cap: usize) -> Result<Vec<PairCounts>, AnalyticsError> {
    let p = ProductGraph::new(g, automaton.clone(), None);
    let d = determinize(&p, cap)?;
    Ok((0..g.node_count()).into_par_iter().map(|a| pair_counts(&p, &d, a)).collect::<Result<_, _>>()?)
}

/// Betweenness of `x` over shortest paths conforming to `r`.
///
/// A pair's through-`x` count is its shortest conforming count minus the
/// count, at the same length, once `x` is deleted.
pub fn bc_r(g: &Graph, x: &str, r: &Regex) -> Result<f64, AnalyticsError> {
    bc_r_with_cap(g, x, r, DEFAULT_CAP)
}

pub fn bc_r_with_cap(g: &Graph, x: &str, r: &Regex, cap: usize) -> Result<f64, AnalyticsError> {
    let x = resolve(g, x)?;
    let a = compile(r);
    let full = full_counts(g, &a, cap)?;
    bc_r_from(g, &a, &full, x, cap)
}

/// [`bc_r`] for every node, indexed by node.
pub fn bc_r_all(g: &Graph, r: &Regex, cap: usize) -> Result<Vec<f64>, AnalyticsError> {
    let a = compile(r);
    let full = full_counts(g, &a, cap)?;
    g.nodes().map(|x| bc_r_from(g, &a, &full, x, cap)).collect()
}

/// Randomized [`bc_r`]. Each pair's fraction is estimated from shortest
/// conforming runs sampled uniformly and weighted by `1 / amb(p)`: the
/// weight of samples visiting `x` over the total weight.
pub fn bc_r_approx(g: &Graph, x: &str, r: &Regex, epsilon: f64, seed: u64) -> Result<f64, AnalyticsError> {
    let x = resolve(g, x)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(EngineError::InvalidEpsilon(epsilon).into());
    }
    let p = ProductGraph::new(g, compile(r), None);
    let n = g.node_count();
    let lens: Vec<Vec<Option<usize>>> = (0..n).map(|a| min_lengths(&p, a)).collect();
    let samples = estimator_samples(epsilon);
    let terms: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|b| -> Result<Vec<f64>, EngineError> {
            let mut row = vec![0.0; n];
            if b == x {
                return Ok(row);
            }
            let sources: Vec<NodeIx> = (0..n).filter(|&a| a != b && a != x && lens[a][b].is_some()).collect();
            let Some(max) = sources.iter().filter_map(|&a| lens[a][b]).max() else {
                return Ok(row);
            };
            let layers = run_layers(&p, max, Some(b))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            for a in sources {
                let l = lens[a][b].expect("filtered");
                let start = p.start_vertex(a);
                let (mut through, mut all) = (0.0, 0.0);
                for _ in 0..samples {
                    let path = sample_run(&p, &layers, start, l, &mut rng);
                    let w = 1.0 / p.ambiguity(&path.nodes, &path.edges) as f64;
                    all += w;
                    if path.nodes.contains(&x) {
                        through += w;
                    }
                }
                row[a] = through / all;
            }
            Ok(row)
        })
        .collect::<Result<_, _>>()?;
    let mut total = 0.0;
    for a in 0..n {
        for row in &terms {
            total += row[a];
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Approximate { epsilon: f64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralityReport {
    pub node: String,
    #[serde(rename = "bc")]
    pub value: f64,
    #[serde(flatten)]
    pub mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regex: Option<String>,
}

/// Centrality of every node, highest first, ties by id.
pub fn centrality_table(g: &Graph, r: Option<&Regex>, mode: Mode) -> Result<Vec<CentralityReport>, AnalyticsError> {
    let values = match (r, mode) {
        (None, _) => bc_all(g),
        (Some(r), Mode::Exact) => bc_r_all(g, r, DEFAULT_CAP)?,
        (Some(r), Mode::Approximate { epsilon, seed }) => {
            g.nodes().map(|x| bc_r_approx(g, g.node_id(x), r, epsilon, seed)).collect::<Result<_, _>>()?
        }
    };
    let mode = if r.is_none() { Mode::Exact } else { mode };
    let mut rows: Vec<CentralityReport> = g
        .nodes()
        .map(|x| CentralityReport {
            node: g.node_id(x).to_string(),
            value: values[x],
            mode,
            regex: r.map(|r| r.to_string()),
        })
        .collect();
    rows.sort_by(|p, q| q.value.partial_cmp(&p.value).unwrap_or(Ordering::Equal).then_with(|| p.node.cmp(&q.node)));
    Ok(rows)
}
