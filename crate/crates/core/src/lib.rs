//! Graph query engine over labeled, property and vector-labeled graphs.
//!
//! * [`graph`]: the three data models, conversions and RDF import
//! * [`query`]: path expressions and node/edge tests
//! * [`automaton`]: path automata and their product with a graph
//! * [`engine`]: enumeration, reachability, counting and sampling
//! * [`analytics`]: betweenness centrality, optionally regex-restricted
//! * [`neural`]: aggregate-combine GNNs and WL refinement
//! * [`logic`]: two-variable logic with counting
//! * [`xai`]: decision-model interpretability queries

pub mod analytics;
pub mod automaton;
pub mod engine;
pub mod fixtures;
pub mod graph;
pub mod logic;
pub mod neural;
pub mod query;
pub mod xai;

pub use analytics::{bc, bc_r, bc_r_approx, AnalyticsError, CentralityReport};
pub use automaton::{compile, determinize, CapExceeded, DeterministicProduct, PathAutomaton, ProductGraph};
pub use engine::{
    count_approx, count_exact, enumerate, pairs, prepare_sampler, reachable_from, select_nodes, AnswerStream,
    CountRequest, EngineError, Estimate, Sampler,
};
pub use graph::{EdgeIx, Feature, Flavor, Graph, GraphDoc, GraphError, NodeIx, Object, Path, Violation, BOTTOM};
pub use logic::{eval, parse_formula, regex_to_fo2, validate_two_var, Evaluation, Formula, LogicError};
pub use neural::{classify, run_layers, wl_colors, Gnn, NeuralError};
pub use query::{parse_regex, parse_test, ParseError, Regex, Test};
pub use xai::{DecisionModel, Instance, ReasonMode, XaiError};

use thiserror::Error;

/// Any failure of the library, for callers that handle them uniformly.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Violation(#[from] Violation),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Xai(#[from] XaiError),
}
