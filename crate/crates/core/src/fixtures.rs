//! Built-in example graphs, shipped as JSON under `fixtures/`.
//!
//! * `fig1a` contact network as a labeled graph
//! * `fig1b` the same network with properties
//! * `fig1c` its vector-labeled form (columns label, name, age, zip, date, virus)
//! * `fig2` bus/rider vector graph and `fig2_gnn`, the two-layer rule network over it
//! * `fig3` two-variable decision model

use crate::graph::Graph;
use crate::neural::Gnn;
use crate::xai::DecisionModel;

pub const FIG1A_JSON: &str = include_str!("../fixtures/fig1a.json");
pub const FIG1B_JSON: &str = include_str!("../fixtures/fig1b.json");
pub const FIG1C_JSON: &str = include_str!("../fixtures/fig1c.json");
pub const FIG2_JSON: &str = include_str!("../fixtures/fig2.json");
pub const FIG2_GNN_JSON: &str = include_str!("../fixtures/fig2-gnn.json");
pub const FIG3_JSON: &str = include_str!("../fixtures/fig3.json");
pub const FIG1A_NT: &str = include_str!("../fixtures/fig1a.nt");

pub fn fig1a() -> Graph {
    Graph::from_json(FIG1A_JSON).expect("fixture")
}

pub fn fig1b() -> Graph {
    Graph::from_json(FIG1B_JSON).expect("fixture")
}

pub fn fig1c() -> Graph {
    Graph::from_json(FIG1C_JSON).expect("fixture")
}

pub fn fig2() -> Graph {
    Graph::from_json(FIG2_JSON).expect("fixture")
}

pub fn fig2_gnn() -> Gnn {
    Gnn::from_json(FIG2_GNN_JSON).expect("fixture")
}

pub fn fig3() -> DecisionModel {
    DecisionModel::from_json(FIG3_JSON).expect("fixture")
}
