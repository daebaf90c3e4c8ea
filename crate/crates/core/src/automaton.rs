//! Compiled path automata and their products with a graph.
//!
//! A [`PathAutomaton`] has two kinds of transitions: edge moves, which
//! consume one graph edge in a given direction, and node guards, which
//! consume nothing and test the current node (an epsilon is a guard with
//! [`Test::Any`]). Guards are resolved per node by closure, so a run over a
//! path is just the sequence of edge moves it takes; the number of runs over
//! a fixed path is finite.
//!
//! [`ProductGraph`] pairs graph nodes with post-move automaton states.
//! [`DeterministicProduct`] applies the subset construction per node, which
//! makes walks and graph paths correspond one to one.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::graph::{EdgeIx, Graph, NodeIx, Traversal};
use crate::query::{Regex, Test};

pub type StateId = usize;

/// Default limit on deterministic product vertices.
pub const DEFAULT_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMove {
    pub from: StateId,
    pub dir: Direction,
    pub test: Test,
    pub to: StateId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Guard {
    pub from: StateId,
    pub test: Test,
    pub to: StateId,
}

#[derive(Debug, Clone)]
pub struct PathAutomaton {
    state_count: usize,
    initial: StateId,
    finals: FixedBitSet,
    moves: Vec<EdgeMove>,
    guards: Vec<Guard>,
    moves_from: Vec<Vec<usize>>,
    guards_from: Vec<Vec<usize>>,
}

struct Builder {
    states: usize,
    moves: Vec<EdgeMove>,
    guards: Vec<Guard>,
}

impl Builder {
    fn state(&mut self) -> StateId {
        self.states += 1;
        self.states - 1
    }

    fn epsilon(&mut self, from: StateId, to: StateId) {
        self.guards.push(Guard { from, test: Test::Any, to });
    }

    /// Thompson-style fragment; returns `(entry, exit)`.
    fn fragment(&mut self, r: &Regex) -> (StateId, StateId) {
        match r {
            Regex::Node(t) => {
                let (s, f) = (self.state(), self.state());
                self.guards.push(Guard { from: s, test: t.clone(), to: f });
                (s, f)
            }
            Regex::Fwd(t) | Regex::Bwd(t) => {
                let (s, f) = (self.state(), self.state());
                let dir = if matches!(r, Regex::Fwd(_)) { Direction::Forward } else { Direction::Backward };
                self.moves.push(EdgeMove { from: s, dir, test: t.clone(), to: f });
                (s, f)
            }
            Regex::Seq(a, b) => {
                let (s1, f1) = self.fragment(a);
                let (s2, f2) = self.fragment(b);
                self.epsilon(f1, s2);
                (s1, f2)
            }
            Regex::Alt(a, b) => {
                let (s, f) = (self.state(), self.state());
                for branch in [a, b] {
                    let (bs, bf) = self.fragment(branch);
                    self.epsilon(s, bs);
                    self.epsilon(bf, f);
                }
                (s, f)
            }
            Regex::Star(a) => {
                let (s, f) = (self.state(), self.state());
                let (bs, bf) = self.fragment(a);
                self.epsilon(s, bs);
                self.epsilon(bf, bs);
                self.epsilon(bf, f);
                self.epsilon(s, f);
                (s, f)
            }
        }
    }
}

/// Compiles a regex; the result accepts exactly the paths in its denotation.
pub fn compile(r: &Regex) -> PathAutomaton {
    let mut b = Builder { states: 0, moves: Vec::new(), guards: Vec::new() };
    let (initial, last) = b.fragment(r);
    PathAutomaton::trimmed(b.states, initial, &[last], b.moves, b.guards)
}

impl PathAutomaton {
    /// Builds an automaton and drops states that are unreachable from the
    /// initial state or cannot reach a final one.
    pub fn trimmed(
        state_count: usize,
        initial: StateId,
        finals: &[StateId],
        moves: Vec<EdgeMove>,
        guards: Vec<Guard>,
    ) -> Self {
        let mut fwd = vec![Vec::new(); state_count];
        let mut bwd = vec![Vec::new(); state_count];
        for (from, to) in moves.iter().map(|m| (m.from, m.to)).chain(guards.iter().map(|g| (g.from, g.to))) {
            fwd[from].push(to);
            bwd[to].push(from);
        }
        let reach = |seeds: &[StateId], adj: &[Vec<StateId>]| {
            let mut seen = vec![false; state_count];
            let mut stack: Vec<StateId> = seeds.to_vec();
            while let Some(s) = stack.pop() {
                if !std::mem::replace(&mut seen[s], true) {
                    stack.extend(&adj[s]);
                }
            }
            seen
        };
        let from_init = reach(&[initial], &fwd);
        let to_final = reach(finals, &bwd);
        let mut renumber = vec![None; state_count];
        let mut next = 0;
        for s in 0..state_count {
            if (from_init[s] && to_final[s]) || s == initial {
                renumber[s] = Some(next);
                next += 1;
            }
        }
        let keep = |s: StateId| from_init[s] && to_final[s];
        let mut out_finals = FixedBitSet::with_capacity(next);
        for &f in finals {
            if keep(f) {
                out_finals.insert(renumber[f].unwrap());
            }
        }
        let moves: Vec<EdgeMove> = moves
            .into_iter()
            .filter(|m| keep(m.from) && keep(m.to))
            .map(|m| EdgeMove { from: renumber[m.from].unwrap(), to: renumber[m.to].unwrap(), ..m })
            .collect();
        let guards: Vec<Guard> = guards
            .into_iter()
            .filter(|g| keep(g.from) && keep(g.to))
            .map(|g| Guard { from: renumber[g.from].unwrap(), to: renumber[g.to].unwrap(), ..g })
            .collect();
        let mut moves_from = vec![Vec::new(); next];
        for (i, m) in moves.iter().enumerate() {
            moves_from[m.from].push(i);
        }
        let mut guards_from = vec![Vec::new(); next];
        for (i, g) in guards.iter().enumerate() {
            guards_from[g.from].push(i);
        }
        PathAutomaton {
            state_count: next,
            initial: renumber[initial].unwrap(),
            finals: out_finals,
            moves,
            guards,
            moves_from,
            guards_from,
        }
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_final(&self, s: StateId) -> bool {
        self.finals.contains(s)
    }

    pub fn moves(&self) -> &[EdgeMove] {
        &self.moves
    }

    pub fn guards(&self) -> &[Guard] {
        &self.guards
    }

    /// Whether the automaton accepts nothing on any graph.
    pub fn is_empty(&self) -> bool {
        self.finals.is_clear()
    }

    /// States reachable from `seed` at node `n` through guards that hold there.
    pub fn closure_at(&self, g: &Graph, n: NodeIx, seed: &FixedBitSet) -> FixedBitSet {
        let mut set = seed.clone();
        set.grow(self.state_count);
        let mut stack: Vec<StateId> = set.ones().collect();
        while let Some(s) = stack.pop() {
            for &gi in &self.guards_from[s] {
                let guard = &self.guards[gi];
                if !set.contains(guard.to) && guard.test.matches(g.node(n)) {
                    set.insert(guard.to);
                    stack.push(guard.to);
                }
            }
        }
        set
    }

    /// Moves from `closed` (a closed state set) applicable to a traversal.
    fn applicable<'a>(
        &'a self,
        g: &'a Graph,
        closed: &'a FixedBitSet,
        t: Traversal,
    ) -> impl Iterator<Item = usize> + 'a {
        closed.ones().flat_map(move |s| self.moves_from[s].iter().copied()).filter(move |&mi| {
            let m = &self.moves[mi];
            let dir_ok = match m.dir {
                Direction::Forward => t.forward,
                Direction::Backward => t.backward,
            };
            dir_ok && m.test.matches(g.edge(t.edge))
        })
    }

    /// Graphviz rendering for debugging.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph automaton {\n  rankdir=LR;\n");
        for s in 0..self.state_count {
            let shape = if self.is_final(s) { "doublecircle" } else { "circle" };
            let _ = writeln!(out, "  q{s} [shape={shape}];");
        }
        let _ = writeln!(out, "  start [shape=point];\n  start -> q{};", self.initial);
        for m in &self.moves {
            let suffix = if m.dir == Direction::Backward { "^-" } else { "" };
            let _ =
                writeln!(out, "  q{} -> q{} [label=\"{}{}\"];", m.from, m.to, escape_dot(&m.test.to_string()), suffix);
        }
        for gd in &self.guards {
            let _ = writeln!(
                out,
                "  q{} -> q{} [label=\"?{}\", style=dashed];",
                gd.from,
                gd.to,
                escape_dot(&gd.test.to_string())
            );
        }
        out.push_str("}\n");
        out
    }
}

fn escape_dot(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub type VertexIx = usize;

/// One product step; `mv` identifies the edge move, so parallel steps
/// between the same vertices are distinct runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub edge: EdgeIx,
    pub mv: usize,
    pub target: VertexIx,
}

/// Graph × automaton. Vertex `n * Q + q` is node `n` in post-move state `q`.
#[derive(Debug, Clone)]
pub struct ProductGraph<'g> {
    graph: &'g Graph,
    automaton: PathAutomaton,
    excluded: Option<NodeIx>,
    closures: Vec<FixedBitSet>,
    accepting: FixedBitSet,
    steps: Vec<Vec<Step>>,
    live: FixedBitSet,
    starts: Vec<VertexIx>,
}

/// Builds the product of `g` and `a`.
pub fn product<'g>(g: &'g Graph, a: &PathAutomaton) -> ProductGraph<'g> {
    ProductGraph::new(g, a.clone(), None)
}

impl<'g> ProductGraph<'g> {
    /// Product over `g` with one node (and its edges) removed.
    pub fn new(g: &'g Graph, automaton: PathAutomaton, excluded: Option<NodeIx>) -> Self {
        let q = automaton.state_count();
        let nv = g.node_count() * q;
        let mut closures = Vec::with_capacity(nv);
        let mut accepting = FixedBitSet::with_capacity(nv);
        for n in g.nodes() {
            for s in 0..q {
                let mut seed = FixedBitSet::with_capacity(q);
                seed.insert(s);
                let c = automaton.closure_at(g, n, &seed);
                if c.intersection(&automaton.finals).next().is_some() {
                    accepting.insert(n * q + s);
                }
                closures.push(c);
            }
        }
        let blocked = |n: NodeIx| excluded == Some(n);
        let mut steps = vec![Vec::new(); nv];
        for n in g.nodes().filter(|&n| !blocked(n)) {
            for s in 0..q {
                let v = n * q + s;
                let closed = &closures[v];
                let mut out = Vec::new();
                for &t in g.traversals(n) {
                    if blocked(t.to) {
                        continue;
                    }
                    for mi in automaton.applicable(g, closed, t) {
                        out.push(Step { edge: t.edge, mv: mi, target: t.to * q + automaton.moves[mi].to });
                    }
                }
                steps[v] = out;
            }
        }
        if let Some(x) = excluded {
            for s in 0..q {
                accepting.set(x * q + s, false);
            }
        }
        // live = can reach an accepting vertex
        let mut preds = vec![Vec::new(); nv];
        for (v, out) in steps.iter().enumerate() {
            for st in out {
                preds[st.target].push(v);
            }
        }
        let mut live = FixedBitSet::with_capacity(nv);
        let mut stack: Vec<VertexIx> = accepting.ones().collect();
        while let Some(v) = stack.pop() {
            if !live.put(v) {
                stack.extend(&preds[v]);
            }
        }
        let init = automaton.initial();
        let starts = g.nodes().map(|n| n * q + init).filter(|&v| live.contains(v)).collect();
        ProductGraph { graph: g, automaton, excluded, closures, accepting, steps, live, starts }
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn automaton(&self) -> &PathAutomaton {
        &self.automaton
    }

    pub fn excluded(&self) -> Option<NodeIx> {
        self.excluded
    }

    pub fn vertex_count(&self) -> usize {
        self.steps.len()
    }

    pub fn vertex(&self, n: NodeIx, state: StateId) -> VertexIx {
        n * self.automaton.state_count() + state
    }

    pub fn node_of(&self, v: VertexIx) -> NodeIx {
        v / self.automaton.state_count()
    }

    pub fn state_of(&self, v: VertexIx) -> StateId {
        v % self.automaton.state_count()
    }

    /// `(n, initial)` for node `n`, whether live or not.
    pub fn start_vertex(&self, n: NodeIx) -> VertexIx {
        self.vertex(n, self.automaton.initial())
    }

    /// Start vertices from which some accepting vertex is reachable.
    pub fn starts(&self) -> &[VertexIx] {
        &self.starts
    }

    pub fn is_accepting(&self, v: VertexIx) -> bool {
        self.accepting.contains(v)
    }

    pub fn is_live(&self, v: VertexIx) -> bool {
        self.live.contains(v)
    }

    pub fn steps(&self, v: VertexIx) -> &[Step] {
        &self.steps[v]
    }

    pub fn closure(&self, v: VertexIx) -> &FixedBitSet {
        &self.closures[v]
    }

    pub fn is_blocked(&self, n: NodeIx) -> bool {
        self.excluded == Some(n)
    }

    /// Post-move states reached from post-move set `states` at `n` by taking
    /// traversal `t`.
    pub fn advance(&self, n: NodeIx, states: &FixedBitSet, t: Traversal) -> FixedBitSet {
        let q = self.automaton.state_count();
        let mut next = FixedBitSet::with_capacity(q);
        for s in states.ones() {
            for st in &self.steps[n * q + s] {
                if st.edge == t.edge && self.node_of(st.target) == t.to {
                    next.insert(self.state_of(st.target));
                }
            }
        }
        next
    }

    /// Number of accepting runs over a fixed path (0 if it does not conform).
    pub fn ambiguity(&self, nodes: &[NodeIx], edges: &[EdgeIx]) -> u128 {
        let q = self.automaton.state_count();
        if nodes.iter().any(|&n| self.is_blocked(n)) {
            return 0;
        }
        let mut cur = vec![0u128; q];
        cur[self.automaton.initial()] = 1;
        for (i, &e) in edges.iter().enumerate() {
            let (n, to) = (nodes[i], nodes[i + 1]);
            let mut next = vec![0u128; q];
            for (s, &ways) in cur.iter().enumerate() {
                if ways == 0 {
                    continue;
                }
                for st in &self.steps[n * q + s] {
                    if st.edge == e && self.node_of(st.target) == to {
                        let t = self.state_of(st.target);
                        next[t] = next[t].saturating_add(ways);
                    }
                }
            }
            cur = next;
        }
        let last = *nodes.last().expect("non-empty path");
        (0..q).filter(|&s| self.is_accepting(last * q + s)).fold(0u128, |acc, s| acc.saturating_add(cur[s]))
    }

    pub fn to_dot(&self) -> String {
        let g = self.graph;
        let mut out = String::from("digraph product {\n");
        for v in 0..self.vertex_count() {
            if !self.is_live(v) && !self.starts.contains(&v) {
                continue;
            }
            let shape = if self.is_accepting(v) { "doublecircle" } else { "ellipse" };
            let _ = writeln!(
                out,
                "  v{v} [label=\"{},q{}\", shape={shape}];",
                escape_dot(g.node_id(self.node_of(v))),
                self.state_of(v)
            );
            for st in &self.steps[v] {
                if self.is_live(st.target) {
                    let _ = writeln!(out, "  v{v} -> v{} [label=\"{}\"];", st.target, escape_dot(g.edge_id(st.edge)));
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("deterministic product exceeds {0} vertices; use the approximate counter")]
pub struct CapExceeded(pub usize);

/// One deterministic step: at most one per traversal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetStep {
    pub edge: EdgeIx,
    pub to_node: NodeIx,
    pub target: usize,
}

/// Per-node subset construction over a [`ProductGraph`].
#[derive(Debug, Clone)]
pub struct DeterministicProduct {
    vertices: Vec<(NodeIx, FixedBitSet)>,
    accepting: FixedBitSet,
    steps: Vec<Vec<DetStep>>,
    starts: Vec<Option<usize>>,
}

/// Determinizes `p`, failing once more than `cap` vertices are needed.
pub fn determinize(p: &ProductGraph<'_>, cap: usize) -> Result<DeterministicProduct, CapExceeded> {
    let g = p.graph();
    let a = p.automaton();
    let q = a.state_count();
    let mut index: HashMap<(NodeIx, FixedBitSet), usize> = HashMap::new();
    let mut vertices: Vec<(NodeIx, FixedBitSet)> = Vec::new();
    let mut queue = VecDeque::new();
    let mut intern = |n: NodeIx,
                      set: FixedBitSet,
                      vertices: &mut Vec<(NodeIx, FixedBitSet)>,
                      queue: &mut VecDeque<usize>|
     -> Result<usize, CapExceeded> {
        if let Some(&ix) = index.get(&(n, set.clone())) {
            return Ok(ix);
        }
        if vertices.len() >= cap {
            return Err(CapExceeded(cap));
        }
        let ix = vertices.len();
        index.insert((n, set.clone()), ix);
        vertices.push((n, set));
        queue.push_back(ix);
        Ok(ix)
    };

    let mut starts = vec![None; g.node_count()];
    for n in g.nodes().filter(|&n| !p.is_blocked(n)) {
        let mut seed = FixedBitSet::with_capacity(q);
        seed.insert(a.initial());
        starts[n] = Some(intern(n, seed, &mut vertices, &mut queue)?);
    }
    let mut steps: Vec<Vec<DetStep>> = Vec::new();
    while let Some(ix) = queue.pop_front() {
        let (n, states) = vertices[ix].clone();
        let mut out = Vec::new();
        for &t in g.traversals(n) {
            if p.is_blocked(t.to) {
                continue;
            }
            let next = p.advance(n, &states, t);
            if next.is_clear() {
                continue;
            }
            let target = intern(t.to, next, &mut vertices, &mut queue)?;
            out.push(DetStep { edge: t.edge, to_node: t.to, target });
        }
        if steps.len() <= ix {
            steps.resize(ix + 1, Vec::new());
        }
        steps[ix] = out;
    }
    steps.resize(vertices.len(), Vec::new());
    let mut accepting = FixedBitSet::with_capacity(vertices.len());
    for (ix, (n, states)) in vertices.iter().enumerate() {
        if states.ones().any(|s| p.is_accepting(p.vertex(*n, s))) {
            accepting.insert(ix);
        }
    }
    Ok(DeterministicProduct { vertices, accepting, steps, starts })
}

impl DeterministicProduct {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn node_of(&self, v: usize) -> NodeIx {
        self.vertices[v].0
    }

    /// Post-move automaton states of a vertex.
    pub fn states_of(&self, v: usize) -> &FixedBitSet {
        &self.vertices[v].1
    }

    pub fn start(&self, n: NodeIx) -> Option<usize> {
        self.starts[n]
    }

    pub fn is_accepting(&self, v: usize) -> bool {
        self.accepting.contains(v)
    }

    pub fn steps(&self, v: usize) -> &[DetStep] {
        &self.steps[v]
    }
}
