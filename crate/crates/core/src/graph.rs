//! Graph data models: labeled, property and vector-labeled multigraphs.
//!
//! All three flavors share one representation. Objects (nodes and edges) are
//! stored sorted by identifier so that index order coincides with the
//! lexicographic order of ids; enumeration order in the engine relies on it.
//!
//! Graphs are immutable once built. The only way in is through a
//! [`GraphDoc`] (the JSON document form), which is validated before any
//! [`Graph`] is produced.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reserved atom marking a missing feature value.
pub const BOTTOM: &str = "⊥";

pub type NodeIx = usize;
pub type EdgeIx = usize;

/// One feature entry; `None` is [`BOTTOM`].
pub type Feature = Option<String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flavor {
    Labeled,
    Property,
    Vector(usize),
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flavor::Labeled => f.write_str("labeled"),
            Flavor::Property => f.write_str("property"),
            Flavor::Vector(d) => write!(f, "vector({d})"),
        }
    }
}

/// First violated invariant found in a graph document.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("dangling endpoint: edge {edge} refers to missing node {node}")]
    DanglingEndpoint { edge: String, node: String },
    #[error("missing label on {object}")]
    MissingLabel { object: String },
    #[error("dimension mismatch on {object}: expected {expected}, found {found}")]
    DimensionMismatch { object: String, expected: usize, found: usize },
    #[error("vector graph without a positive dimension")]
    MissingDimension,
    #[error("duplicate identifier {0}")]
    DuplicateId(String),
    #[error("empty atom in {0}")]
    EmptyAtom(String),
    #[error("reserved atom {BOTTOM} used outside a feature vector in {0}")]
    ReservedBottom(String),
    #[error("{field} not allowed on {flavor} graph ({object})")]
    FieldNotAllowed { object: String, field: &'static str, flavor: Flavor },
}

/// Serialized graph model tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Labeled,
    Property,
    Vector,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub props: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<Feature>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub id: String,
    pub src: String,
    pub dst: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub props: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<Feature>>,
}

/// JSON document form of a graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDoc {
    pub model: Model,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    /// Column header of a vector graph produced from a property graph.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub columns: Option<Vec<String>>,
    pub nodes: Vec<NodeDoc>,
    pub edges: Vec<EdgeDoc>,
}

impl GraphDoc {
    pub fn new(model: Model) -> Self {
        GraphDoc { model, dimension: None, columns: None, nodes: Vec::new(), edges: Vec::new() }
    }

    pub fn flavor(&self) -> Result<Flavor, Violation> {
        Ok(match self.model {
            Model::Labeled => Flavor::Labeled,
            Model::Property => Flavor::Property,
            Model::Vector => match self.dimension {
                Some(d) if d >= 1 => Flavor::Vector(d),
                _ => return Err(Violation::MissingDimension),
            },
        })
    }

    /// Checks every graph invariant and reports the first violation.
    pub fn validate(&self) -> Result<(), Violation> {
        let flavor = self.flavor()?;
        let mut seen = BTreeSet::new();
        for n in &self.nodes {
            check_atom(&n.id, &n.id)?;
            if !seen.insert(n.id.as_str()) {
                return Err(Violation::DuplicateId(n.id.clone()));
            }
            check_object(&n.id, &n.label, &n.props, &n.features, flavor)?;
        }
        for e in &self.edges {
            check_atom(&e.id, &e.id)?;
            if !seen.insert(e.id.as_str()) {
                return Err(Violation::DuplicateId(e.id.clone()));
            }
        }
        let node_ids: BTreeSet<&str> = self.nodes.iter().map(|n| n.id.as_str()).collect();
        for e in &self.edges {
            for end in [&e.src, &e.dst] {
                if !node_ids.contains(end.as_str()) {
                    return Err(Violation::DanglingEndpoint { edge: e.id.clone(), node: end.clone() });
                }
            }
            check_object(&e.id, &e.label, &e.props, &e.features, flavor)?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph documents always serialize")
    }
}

fn check_atom(object: &str, atom: &str) -> Result<(), Violation> {
    if atom.is_empty() {
        return Err(Violation::EmptyAtom(object.to_string()));
    }
    if atom == BOTTOM {
        return Err(Violation::ReservedBottom(object.to_string()));
    }
    Ok(())
}

fn check_object(
    id: &str,
    label: &Option<String>,
    props: &Option<BTreeMap<String, String>>,
    features: &Option<Vec<Feature>>,
    flavor: Flavor,
) -> Result<(), Violation> {
    let not_allowed = |field| Violation::FieldNotAllowed { object: id.to_string(), field, flavor };
    match flavor {
        Flavor::Labeled | Flavor::Property => {
            match label {
                Some(l) => check_atom(id, l)?,
                None => return Err(Violation::MissingLabel { object: id.to_string() }),
            }
            if features.is_some() {
                return Err(not_allowed("features"));
            }
            if let Some(props) = props {
                if flavor == Flavor::Labeled && !props.is_empty() {
                    return Err(not_allowed("props"));
                }
                for (k, v) in props {
                    check_atom(id, k)?;
                    check_atom(id, v)?;
                }
            }
        }
        Flavor::Vector(d) => {
            if label.is_some() {
                return Err(not_allowed("label"));
            }
            if props.as_ref().is_some_and(|p| !p.is_empty()) {
                return Err(not_allowed("props"));
            }
            let found = features.as_ref().map_or(0, Vec::len);
            if found != d {
                return Err(Violation::DimensionMismatch { object: id.to_string(), expected: d, found });
            }
            for f in features.iter().flatten().flatten() {
                if f.is_empty() {
                    return Err(Violation::EmptyAtom(id.to_string()));
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error(transparent)]
    Invalid(#[from] Violation),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("line {line}: {message}")]
    NTriples { line: usize, message: String },
    #[error("{0} is not a property graph")]
    NotProperty(Flavor),
    #[error("{0} is not a vector graph")]
    NotVector(Flavor),
    #[error("column header must start with \"label\" and list each property once")]
    BadColumns,
    #[error("unknown node {0}")]
    UnknownNode(String),
}

/// Data attached to a node or an edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Object {
    pub id: String,
    pub label: Option<String>,
    pub props: BTreeMap<String, String>,
    pub features: Vec<Feature>,
}

impl Object {
    /// The label, or the first feature on vector graphs.
    pub fn label_atom(&self) -> Option<&str> {
        match &self.label {
            Some(l) => Some(l),
            None => self.features.first().and_then(|f| f.as_deref()),
        }
    }

    pub fn prop(&self, name: &str) -> Option<&str> {
        self.props.get(name).map(String::as_str)
    }

    /// 1-based feature lookup; `None` for BOTTOM or out of range.
    pub fn feature(&self, i: usize) -> Option<&str> {
        i.checked_sub(1).and_then(|i| self.features.get(i)).and_then(|f| f.as_deref())
    }
}

/// One way of stepping along an edge out of a node.
///
/// A self-loop yields a single traversal that is both forward and backward,
/// since `n e n` is the same path whichever way it is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Traversal {
    pub edge: EdgeIx,
    pub to: NodeIx,
    pub forward: bool,
    pub backward: bool,
}

/// Validated, immutable multigraph.
#[derive(Debug, Clone)]
pub struct Graph {
    flavor: Flavor,
    columns: Option<Vec<String>>,
    nodes: Vec<Object>,
    edges: Vec<Object>,
    endpoints: Vec<(NodeIx, NodeIx)>,
    node_index: HashMap<String, NodeIx>,
    edge_index: HashMap<String, EdgeIx>,
    out_edges: Vec<Vec<EdgeIx>>,
    in_edges: Vec<Vec<EdgeIx>>,
    traversals: Vec<Vec<Traversal>>,
}

impl TryFrom<GraphDoc> for Graph {
    type Error = Violation;

    fn try_from(doc: GraphDoc) -> Result<Self, Violation> {
        doc.validate()?;
        let flavor = doc.flavor()?;
        let mut nodes: Vec<Object> = doc
            .nodes
            .into_iter()
            .map(|n| Object {
                id: n.id,
                label: n.label,
                props: n.props.unwrap_or_default(),
                features: n.features.unwrap_or_default(),
            })
            .collect();
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        let node_index: HashMap<String, NodeIx> = nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();

        let mut edges: Vec<(Object, NodeIx, NodeIx)> = doc
            .edges
            .into_iter()
            .map(|e| {
                let (s, d) = (node_index[&e.src], node_index[&e.dst]);
                let obj = Object {
                    id: e.id,
                    label: e.label,
                    props: e.props.unwrap_or_default(),
                    features: e.features.unwrap_or_default(),
                };
                (obj, s, d)
            })
            .collect();
        edges.sort_by(|a, b| a.0.id.cmp(&b.0.id));

        let mut out_edges = vec![Vec::new(); nodes.len()];
        let mut in_edges = vec![Vec::new(); nodes.len()];
        let mut traversals = vec![Vec::new(); nodes.len()];
        let mut endpoints = Vec::with_capacity(edges.len());
        let mut edge_index = HashMap::with_capacity(edges.len());
        let mut objects = Vec::with_capacity(edges.len());
        for (ix, (obj, s, d)) in edges.into_iter().enumerate() {
            out_edges[s].push(ix);
            in_edges[d].push(ix);
            if s == d {
                traversals[s].push(Traversal { edge: ix, to: s, forward: true, backward: true });
            } else {
                traversals[s].push(Traversal { edge: ix, to: d, forward: true, backward: false });
                traversals[d].push(Traversal { edge: ix, to: s, forward: false, backward: true });
            }
            endpoints.push((s, d));
            edge_index.insert(obj.id.clone(), ix);
            objects.push(obj);
        }
        Ok(Graph {
            flavor,
            columns: doc.columns,
            nodes,
            edges: objects,
            endpoints,
            node_index,
            edge_index,
            out_edges,
            in_edges,
            traversals,
        })
    }
}

impl Graph {
    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        Ok(Graph::try_from(GraphDoc::from_json(text)?)?)
    }

    pub fn to_doc(&self) -> GraphDoc {
        let model = match self.flavor {
            Flavor::Labeled => Model::Labeled,
            Flavor::Property => Model::Property,
            Flavor::Vector(_) => Model::Vector,
        };
        let dimension = match self.flavor {
            Flavor::Vector(d) => Some(d),
            _ => None,
        };
        let parts = |o: &Object| {
            let props = (self.flavor == Flavor::Property && !o.props.is_empty()).then(|| o.props.clone());
            let features = matches!(self.flavor, Flavor::Vector(_)).then(|| o.features.clone());
            (o.label.clone(), props, features)
        };
        GraphDoc {
            model,
            dimension,
            columns: self.columns.clone(),
            nodes: self
                .nodes
                .iter()
                .map(|n| {
                    let (label, props, features) = parts(n);
                    NodeDoc { id: n.id.clone(), label, props, features }
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .zip(&self.endpoints)
                .map(|(e, &(s, d))| {
                    let (label, props, features) = parts(e);
                    EdgeDoc {
                        id: e.id.clone(),
                        src: self.nodes[s].id.clone(),
                        dst: self.nodes[d].id.clone(),
                        label,
                        props,
                        features,
                    }
                })
                .collect(),
        }
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn columns(&self) -> Option<&[String]> {
        self.columns.as_deref()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeIx> {
        0..self.nodes.len()
    }

    pub fn node(&self, n: NodeIx) -> &Object {
        &self.nodes[n]
    }

    pub fn edge(&self, e: EdgeIx) -> &Object {
        &self.edges[e]
    }

    pub fn node_id(&self, n: NodeIx) -> &str {
        &self.nodes[n].id
    }

    pub fn edge_id(&self, e: EdgeIx) -> &str {
        &self.edges[e].id
    }

    pub fn node_ix(&self, id: &str) -> Option<NodeIx> {
        self.node_index.get(id).copied()
    }

    pub fn edge_ix(&self, id: &str) -> Option<EdgeIx> {
        self.edge_index.get(id).copied()
    }

    /// `(source, target)` of an edge.
    pub fn endpoints(&self, e: EdgeIx) -> (NodeIx, NodeIx) {
        self.endpoints[e]
    }

    pub fn out_edges(&self, n: NodeIx) -> &[EdgeIx] {
        &self.out_edges[n]
    }

    pub fn in_edges(&self, n: NodeIx) -> &[EdgeIx] {
        &self.in_edges[n]
    }

    /// Traversals out of `n`, ordered by edge index.
    pub fn traversals(&self, n: NodeIx) -> &[Traversal] {
        &self.traversals[n]
    }

    pub fn validate(&self) -> Result<(), Violation> {
        self.to_doc().validate()
    }

    /// Converts a property graph into a vector-labeled one.
    ///
    /// Column 1 holds the label; the remaining columns hold property values
    /// in `order`, or sorted by name when `order` is `None`. Properties an
    /// object lacks become BOTTOM.
    pub fn to_vector_labeled(&self, order: Option<&[String]>) -> Result<Graph, GraphError> {
        if self.flavor != Flavor::Property {
            return Err(GraphError::NotProperty(self.flavor));
        }
        let names: BTreeSet<&str> =
            self.nodes.iter().chain(&self.edges).flat_map(|o| o.props.keys().map(String::as_str)).collect();
        let props: Vec<String> = match order {
            None => names.iter().map(|s| s.to_string()).collect(),
            Some(order) => {
                let given: BTreeSet<&str> = order.iter().map(String::as_str).collect();
                if given.len() != order.len() || given != names {
                    return Err(GraphError::BadColumns);
                }
                order.to_vec()
            }
        };
        let vectorize = |o: &Object| -> Vec<Feature> {
            std::iter::once(o.label.clone()).chain(props.iter().map(|p| o.props.get(p).cloned())).collect()
        };
        let mut doc = self.to_doc();
        doc.model = Model::Vector;
        doc.dimension = Some(props.len() + 1);
        doc.columns = Some(std::iter::once("label".to_string()).chain(props.iter().cloned()).collect());
        for (nd, n) in doc.nodes.iter_mut().zip(&self.nodes) {
            nd.features = Some(vectorize(n));
            nd.label = None;
            nd.props = None;
        }
        for (ed, e) in doc.edges.iter_mut().zip(&self.edges) {
            ed.features = Some(vectorize(e));
            ed.label = None;
            ed.props = None;
        }
        Ok(Graph::try_from(doc)?)
    }

    /// Inverse of [`Graph::to_vector_labeled`], driven by the column header.
    pub fn to_property(&self) -> Result<Graph, GraphError> {
        let Flavor::Vector(d) = self.flavor else {
            return Err(GraphError::NotVector(self.flavor));
        };
        let columns = self.columns.as_ref().ok_or(GraphError::BadColumns)?;
        if columns.len() != d || columns[0] != "label" {
            return Err(GraphError::BadColumns);
        }
        let mut doc = self.to_doc();
        doc.model = Model::Property;
        doc.dimension = None;
        doc.columns = None;
        let split = |f: &[Feature]| {
            let label = f[0].clone();
            let props: BTreeMap<String, String> =
                columns[1..].iter().zip(&f[1..]).filter_map(|(c, v)| v.clone().map(|v| (c.clone(), v))).collect();
            (label, (!props.is_empty()).then_some(props))
        };
        for nd in &mut doc.nodes {
            let (label, props) = split(nd.features.as_deref().unwrap_or_default());
            nd.label = label;
            nd.props = props;
            nd.features = None;
        }
        for ed in &mut doc.edges {
            let (label, props) = split(ed.features.as_deref().unwrap_or_default());
            ed.label = label;
            ed.props = props;
            ed.features = None;
        }
        Ok(Graph::try_from(doc)?)
    }
}

/// An RDF-style `(subject, predicate, object)` triple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

impl Triple {
    pub fn new(s: impl Into<String>, p: impl Into<String>, o: impl Into<String>) -> Self {
        Triple { subject: s.into(), predicate: p.into(), object: o.into() }
    }
}

/// Parses the N-Triples subset: one `<s> <p> <o> .` (or bare-atom, or
/// `"literal"`) triple per line. Blank lines and `#` comments are skipped.
pub fn parse_ntriples(text: &str) -> Result<Vec<Triple>, GraphError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: &str| GraphError::NTriples { line, message: message.to_string() };
        let mut rest = raw.trim();
        if rest.is_empty() || rest.starts_with('#') {
            continue;
        }
        let mut terms = Vec::with_capacity(3);
        while terms.len() < 3 {
            rest = rest.trim_start();
            let (term, tail) = next_term(rest).map_err(|m| err(&m))?;
            terms.push(term);
            rest = tail;
        }
        let tail = rest.trim();
        if !(tail.is_empty() || tail == ".") {
            return Err(err("trailing content after object"));
        }
        for t in &terms {
            if t.is_empty() {
                return Err(err("empty term"));
            }
            if t == BOTTOM {
                return Err(err("reserved atom"));
            }
        }
        let o = terms.pop().unwrap();
        let p = terms.pop().unwrap();
        let s = terms.pop().unwrap();
        out.push(Triple::new(s, p, o));
    }
    Ok(out)
}

fn next_term(s: &str) -> Result<(String, &str), String> {
    if s.is_empty() {
        return Err("expected three terms".into());
    }
    if let Some(body) = s.strip_prefix('<') {
        let end = body.find('>').ok_or("unterminated <...>")?;
        return Ok((body[..end].to_string(), &body[end + 1..]));
    }
    if let Some(body) = s.strip_prefix('"') {
        let mut value = String::new();
        let mut chars = body.char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '\\' => match chars.next() {
                    Some((_, 'n')) => value.push('\n'),
                    Some((_, 't')) => value.push('\t'),
                    Some((_, c)) => value.push(c),
                    None => return Err("dangling escape".into()),
                },
                '"' => {
                    let mut tail = &body[i + 1..];
                    // datatype or language suffixes are dropped
                    if let Some(t) = tail.strip_prefix("^^<") {
                        let end = t.find('>').ok_or("unterminated datatype")?;
                        tail = &t[end + 1..];
                    } else if let Some(t) = tail.strip_prefix('@') {
                        let end = t.find(char::is_whitespace).unwrap_or(t.len());
                        tail = &t[end..];
                    }
                    return Ok((value, tail));
                }
                c => value.push(c),
            }
        }
        return Err("unterminated literal".into());
    }
    let end = s.find(char::is_whitespace).unwrap_or(s.len());
    let mut term = &s[..end];
    let mut tail = &s[end..];
    // bare object directly followed by the terminating dot
    if tail.trim().is_empty() && term.len() > 1 && term.ends_with('.') {
        term = &term[..term.len() - 1];
        tail = ".";
    }
    if term == "." {
        return Err("expected three terms".into());
    }
    Ok((term.to_string(), tail))
}

/// Builds a labeled graph from triples: one node per distinct subject or
/// object (labeled with its own identifier), one edge `t<i>` per distinct
/// triple in first-occurrence order.
pub fn import_rdf(triples: &[Triple]) -> Result<Graph, GraphError> {
    let mut doc = GraphDoc::new(Model::Labeled);
    let mut seen_nodes = BTreeSet::new();
    let mut seen_triples = BTreeSet::new();
    for t in triples {
        if !seen_triples.insert(t) {
            continue;
        }
        for n in [&t.subject, &t.object] {
            if seen_nodes.insert(n.clone()) {
                doc.nodes.push(NodeDoc { id: n.clone(), label: Some(n.clone()), ..NodeDoc::default() });
            }
        }
        doc.edges.push(EdgeDoc {
            id: format!("t{}", doc.edges.len()),
            src: t.subject.clone(),
            dst: t.object.clone(),
            label: Some(t.predicate.clone()),
            ..EdgeDoc::default()
        });
    }
    Ok(Graph::try_from(doc)?)
}

/// A walk `n0 e1 n1 ... ek nk` through a graph, by index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    pub nodes: Vec<NodeIx>,
    pub edges: Vec<EdgeIx>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot concatenate: path ends at node {end} but the next starts at node {start}")]
pub struct ConcatError {
    pub end: NodeIx,
    pub start: NodeIx,
}

impl Path {
    pub fn single(n: NodeIx) -> Self {
        Path { nodes: vec![n], edges: Vec::new() }
    }

    pub fn start(&self) -> NodeIx {
        self.nodes[0]
    }

    pub fn end(&self) -> NodeIx {
        *self.nodes.last().expect("paths are non-empty")
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn concat(&self, other: &Path) -> Result<Path, ConcatError> {
        if self.end() != other.start() {
            return Err(ConcatError { end: self.end(), start: other.start() });
        }
        let mut nodes = self.nodes.clone();
        nodes.extend_from_slice(&other.nodes[1..]);
        let mut edges = self.edges.clone();
        edges.extend_from_slice(&other.edges);
        Ok(Path { nodes, edges })
    }

    /// Interleaved key `n0 e1 n1 ...`; sorting by `(len, key)` gives the
    /// engine's enumeration order.
    pub fn order_key(&self) -> (usize, Vec<usize>) {
        let mut key = Vec::with_capacity(self.nodes.len() + self.edges.len());
        for (i, &n) in self.nodes.iter().enumerate() {
            key.push(n);
            if let Some(&e) = self.edges.get(i) {
                key.push(e);
            }
        }
        (self.len(), key)
    }

    /// Whether every step follows an edge of `g` in some direction.
    pub fn is_walk_in(&self, g: &Graph) -> bool {
        self.nodes.len() == self.edges.len() + 1
            && self.edges.iter().enumerate().all(|(i, &e)| {
                let (s, d) = g.endpoints(e);
                let (a, b) = (self.nodes[i], self.nodes[i + 1]);
                (s, d) == (a, b) || (s, d) == (b, a)
            })
    }

    pub fn display<'a>(&'a self, g: &'a Graph) -> PathDisplay<'a> {
        PathDisplay { path: self, graph: g }
    }

    pub fn to_json(&self, g: &Graph) -> serde_json::Value {
        serde_json::json!({
            "nodes": self.nodes.iter().map(|&n| g.node_id(n)).collect::<Vec<_>>(),
            "edges": self.edges.iter().map(|&e| g.edge_id(e)).collect::<Vec<_>>(),
        })
    }
}

/// Renders a path as `n1 e4 n5`.
pub struct PathDisplay<'a> {
    path: &'a Path,
    graph: &'a Graph,
}

impl fmt::Display for PathDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &n) in self.path.nodes.iter().enumerate() {
            if i > 0 {
                write!(f, " {} ", self.graph.edge_id(self.path.edges[i - 1]))?;
            }
            f.write_str(self.graph.node_id(n))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn labeled(nodes: &[(&str, &str)], edges: &[(&str, &str, &str, &str)]) -> GraphDoc {
        let mut doc = GraphDoc::new(Model::Labeled);
        for (id, l) in nodes {
            doc.nodes.push(NodeDoc { id: id.to_string(), label: Some(l.to_string()), ..Default::default() });
        }
        for (id, s, d, l) in edges {
            doc.edges.push(EdgeDoc {
                id: id.to_string(),
                src: s.to_string(),
                dst: d.to_string(),
                label: Some(l.to_string()),
                ..Default::default()
            });
        }
        doc
    }

    #[test]
    fn fixtures_validate() {
        for g in [
            fixtures::fig1a(),
            fixtures::fig1b(),
            fixtures::fig1c(),
            fixtures::fig2(),
            fixtures::fig3().graph().clone(),
        ] {
            assert_eq!(g.validate(), Ok(()));
        }
    }

    #[test]
    fn dangling_endpoint_is_reported() {
        let doc = labeled(&[("a", "x")], &[("e", "a", "b", "r")]);
        assert_eq!(doc.validate(), Err(Violation::DanglingEndpoint { edge: "e".into(), node: "b".into() }));
        assert!(doc.validate().unwrap_err().to_string().contains("dangling endpoint"));
        assert!(Graph::try_from(doc).is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let mut doc = GraphDoc::new(Model::Vector);
        doc.dimension = Some(6);
        doc.nodes.push(NodeDoc { id: "a".into(), features: Some(vec![Some("x".into()); 5]), ..Default::default() });
        let err = doc.validate().unwrap_err();
        assert!(err.to_string().contains("dimension mismatch"));
    }

    #[test]
    fn bottom_and_labels_are_policed() {
        let doc = labeled(&[("a", BOTTOM)], &[]);
        assert_eq!(doc.validate(), Err(Violation::ReservedBottom("a".into())));
        let mut doc = labeled(&[("a", "x")], &[]);
        doc.nodes[0].label = None;
        assert_eq!(doc.validate(), Err(Violation::MissingLabel { object: "a".into() }));
        let doc = labeled(&[("a", "x")], &[("a", "a", "a", "r")]);
        assert_eq!(doc.validate(), Err(Violation::DuplicateId("a".into())));
    }

    #[test]
    fn vector_conversion_reproduces_feature_table() {
        let columns: Vec<String> = ["name", "age", "zip", "date", "virus"].iter().map(|s| s.to_string()).collect();
        let v = fixtures::fig1b().to_vector_labeled(Some(&columns)).unwrap();
        assert_eq!(v.to_doc(), fixtures::fig1c().to_doc());
    }

    #[test]
    fn vector_conversion_default_order_and_roundtrip() {
        let p = fixtures::fig1b();
        let v = p.to_vector_labeled(None).unwrap();
        assert_eq!(v.flavor(), Flavor::Vector(6));
        assert_eq!(v.columns().unwrap(), ["label", "age", "date", "name", "virus", "zip"]);
        for n in v.nodes() {
            assert_eq!(v.node(n).feature(1), p.node(n).label.as_deref());
        }
        assert_eq!(v.to_property().unwrap().to_doc(), p.to_doc());
    }

    #[test]
    fn vector_conversion_without_properties() {
        let mut doc = labeled(&[("a", "x"), ("b", "y")], &[("e", "a", "b", "r")]);
        doc.model = Model::Property;
        let v = Graph::try_from(doc).unwrap().to_vector_labeled(None).unwrap();
        assert_eq!(v.flavor(), Flavor::Vector(1));
        assert_eq!(v.node(0).features, vec![Some("x".to_string())]);
    }

    #[test]
    fn rdf_import() {
        let g = import_rdf(&[Triple::new("a", "knows", "b")]).unwrap();
        assert_eq!(g.node_count(), 2);
        let e = g.edge_ix("t0").unwrap();
        assert_eq!(g.endpoints(e), (g.node_ix("a").unwrap(), g.node_ix("b").unwrap()));
        assert_eq!(g.edge(e).label.as_deref(), Some("knows"));
        assert_eq!(g.node(g.node_ix("a").unwrap()).label.as_deref(), Some("a"));

        let g = import_rdf(&[Triple::new("a", "knows", "b"), Triple::new("a", "knows", "b")]).unwrap();
        assert_eq!(g.edge_count(), 1);

        let g = import_rdf(&[Triple::new("a", "knows", "a")]).unwrap();
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.endpoints(0), (0, 0));
    }

    #[test]
    fn ntriples_forms_and_errors() {
        let t =
            parse_ntriples("# comment\n<http://x/a> <http://x/p> \"lit \\\"q\\\"\"@en .\n\na p b.\nc p d\n").unwrap();
        assert_eq!(
            t,
            vec![
                Triple::new("http://x/a", "http://x/p", "lit \"q\""),
                Triple::new("a", "p", "b"),
                Triple::new("c", "p", "d"),
            ]
        );
        match parse_ntriples("a p b .\n<a> <p>\n") {
            Err(GraphError::NTriples { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse_ntriples("<a <p> <o> .").is_err());
        assert!(parse_ntriples("a p b c").is_err());
    }

    #[test]
    fn concat_paths() {
        let g = fixtures::fig1a();
        let ix = |s: &str| g.node_ix(s).unwrap();
        let ex = |s: &str| g.edge_ix(s).unwrap();
        let p = Path { nodes: vec![ix("n1"), ix("n3")], edges: vec![ex("e2")] };
        let q = Path { nodes: vec![ix("n3"), ix("n4")], edges: vec![ex("e3")] };
        let pq = p.concat(&q).unwrap();
        assert_eq!(pq.display(&g).to_string(), "n1 e2 n3 e3 n4");
        assert_eq!(pq.len(), 2);
        assert!(pq.is_walk_in(&g));

        let unit = Path::single(ix("n1"));
        let r = Path { nodes: vec![ix("n1"), ix("n5")], edges: vec![ex("e4")] };
        assert_eq!(unit.concat(&r).unwrap(), r);
        assert!(p.concat(&Path::single(ix("n4"))).is_err());
    }
}
