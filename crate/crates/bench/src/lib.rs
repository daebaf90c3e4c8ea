//! Synthetic workloads for the benchmarks.

pub use gqe_core;

use gqe_core::graph::{EdgeDoc, GraphDoc, Model, NodeDoc};
use gqe_core::Graph;

/// `riders` people each riding one of `buses` buses, with contacts between
/// consecutive riders and every fifth rider infected.
pub fn transit(riders: usize, buses: usize) -> Graph {
    let mut doc = GraphDoc::new(Model::Labeled);
    let node = |id: String, label: &str| NodeDoc { id, label: Some(label.into()), ..Default::default() };
    for b in 0..buses {
        doc.nodes.push(node(format!("b{b:04}"), "bus"));
    }
    for p in 0..riders {
        let label = if p % 5 == 0 { "infected" } else { "person" };
        doc.nodes.push(node(format!("p{p:04}"), label));
    }
    let mut edge = |src: String, dst: String, label: &str| {
        let id = format!("e{:05}", doc.edges.len());
        doc.edges.push(EdgeDoc { id, src, dst, label: Some(label.into()), ..Default::default() });
    };
    for p in 0..riders {
        edge(format!("p{p:04}"), format!("b{:04}", (p * 7) % buses), "rides");
        if p + 1 < riders {
            edge(format!("p{p:04}"), format!("p{:04}", p + 1), "contact");
        }
    }
    Graph::try_from(doc).expect("well-formed")
}

/// [`transit`] in vector form, `[kind, flag]` per node, as input for the
/// rule network over riders and buses.
pub fn transit_vector(riders: usize, buses: usize) -> Graph {
    let g = transit(riders, buses);
    let mut doc = g.to_doc();
    doc.model = Model::Vector;
    doc.dimension = Some(2);
    for n in &mut doc.nodes {
        n.features = Some(vec![n.label.take(), Some("0".into())]);
    }
    for e in &mut doc.edges {
        e.features = Some(vec![e.label.take(), Some("0".into())]);
    }
    Graph::try_from(doc).expect("well-formed")
}
