//! `gqe`: command-line front end for the graph query engine.

mod output;

use std::fs;
use std::io::{self, BufWriter};
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use gqe_core::analytics::{centrality_table, Mode};
use gqe_core::automaton::DEFAULT_CAP;
use gqe_core::engine::{prepare_sampler_with_cap, MAX_LENGTH};
use gqe_core::graph::{import_rdf, parse_ntriples, GraphDoc};
use gqe_core::neural::{run_layers, wl_colors_directed};
use gqe_core::xai::{instance_json, parse_instance};
use gqe_core::{
    bc, bc_r, bc_r_approx, classify, count_approx, count_exact, enumerate, eval, pairs, parse_formula, parse_regex,
    parse_test, reachable_from, regex_to_fo2, select_nodes, wl_colors, CountRequest, DecisionModel, EngineError,
    Evaluation, Flavor, Gnn, Graph, NodeIx, ReasonMode, Regex,
};
use serde_json::{json, Value};
use thiserror::Error;

use output::{Format, Sink};

#[derive(Debug, Parser)]
#[command(name = "gqe", version, about = "Query, count, sample and explain over small graphs")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Seed for randomized operations.
    #[arg(long, global = true, env = "GQE_SEED", default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GraphArg {
    /// Graph file (JSON).
    #[arg(short, long)]
    graph: PathBuf,
}

#[derive(Debug, Args)]
struct QueryArgs {
    #[command(flatten)]
    graph: GraphArg,
    /// Path expression, e.g. `?person/rides/?bus`.
    #[arg(short, long)]
    query: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Nodes satisfying a test.
    Nodes {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(short, long)]
        test: String,
    },
    /// Conforming paths up to a length, shortest first.
    Paths {
        #[command(flatten)]
        q: QueryArgs,
        #[arg(long, default_value_t = 10)]
        max_len: usize,
        /// Stop after this many paths.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Start nodes of conforming paths.
    Reach {
        #[command(flatten)]
        q: QueryArgs,
    },
    /// Start/end pairs of conforming paths.
    Pairs {
        #[command(flatten)]
        q: QueryArgs,
    },
    /// Number of conforming paths of an exact length.
    Count {
        #[command(flatten)]
        q: QueryArgs,
        #[arg(long)]
        len: usize,
        /// Use the randomized estimator instead of exact counting.
        #[arg(long)]
        approx: bool,
        #[arg(long, default_value_t = 0.1, value_parser = epsilon)]
        epsilon: f64,
        /// Limit on determinized product states.
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
    },
    /// Uniform draws among conforming paths of an exact length.
    Sample {
        #[command(flatten)]
        q: QueryArgs,
        #[arg(long)]
        len: usize,
        #[arg(short = 'n', long, default_value_t = 1)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
    },
    /// Betweenness centrality, optionally restricted to conforming paths.
    Centrality {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(short, long)]
        query: Option<String>,
        /// Report a single node.
        #[arg(long)]
        node: Option<String>,
        #[arg(long, requires = "query")]
        approx: bool,
        #[arg(long, default_value_t = 0.1, value_parser = epsilon)]
        epsilon: f64,
    },
    /// Nodes a GNN classifies as true.
    Gnn {
        #[command(flatten)]
        graph: GraphArg,
        /// Network file (JSON).
        #[arg(short, long)]
        model: PathBuf,
        /// Also print the feature vectors after every layer.
        #[arg(long)]
        trace: bool,
    },
    /// Colour refinement classes per round.
    Wl {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, default_value_t = 3)]
        rounds: usize,
        /// Keep out- and in-neighbours apart.
        #[arg(long)]
        directed: bool,
    },
    /// Evaluate a two-variable formula, or translate a star-free expression.
    Fo2 {
        #[arg(short, long, required_unless_present = "regex")]
        graph: Option<PathBuf>,
        #[arg(short, long, conflicts_with = "regex")]
        formula: Option<String>,
        /// Translate this expression; evaluates it too when a graph is given.
        #[arg(long, required_unless_present = "formula")]
        regex: Option<String>,
    },
    /// Queries over a read-once decision model.
    Xai {
        /// Decision model file (JSON).
        #[arg(short, long)]
        model: PathBuf,
        #[command(subcommand)]
        op: XaiOp,
    },
    /// Property graph to vector form and back, or N-Triples import.
    Convert {
        #[arg(short, long, required_unless_present = "rdf", conflicts_with = "rdf")]
        graph: Option<PathBuf>,
        /// N-Triples file to import.
        #[arg(long)]
        rdf: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Target::Vector)]
        to: Target,
        /// Property order for the vector columns, comma separated.
        #[arg(long, value_delimiter = ',')]
        columns: Option<Vec<String>>,
    },
    /// Check a graph, network or decision model file.
    Validate {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Kind::Graph)]
        kind: Kind,
    },
}

#[derive(Debug, Subcommand)]
enum XaiOp {
    /// Class of a total instance such as `x=1,y=0`.
    Classify { instance: String },
    /// A completion of a partial instance with the given class.
    Exists {
        #[arg(long, value_parser = bit, action = ArgAction::Set)]
        target: bool,
        #[arg(default_value = "")]
        partial: String,
    },
    /// Whether every completion of a partial instance has the given class.
    Suffreason {
        #[arg(long, value_parser = bit, action = ArgAction::Set)]
        target: bool,
        partial: String,
    },
    /// A minimal sufficient reason for a total instance.
    Minreason {
        instance: String,
        /// Smallest size instead of subset-minimal.
        #[arg(long)]
        minimum: bool,
    },
    /// Every subset-minimal sufficient reason for a class.
    Allminreasons {
        #[arg(long, value_parser = bit, action = ArgAction::Set)]
        target: bool,
    },
    /// Whether flipping a feature can change the class.
    Bias { feature: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Target {
    Vector,
    Property,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Kind {
    Graph,
    Gnn,
    DecisionModel,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] gqe_core::Error),
}

macro_rules! core_errors {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        })*
    };
}

core_errors!(
    gqe_core::GraphError,
    gqe_core::Violation,
    gqe_core::ParseError,
    gqe_core::EngineError,
    gqe_core::AnalyticsError,
    gqe_core::NeuralError,
    gqe_core::LogicError,
    gqe_core::XaiError
);

impl CliError {
    fn kind(&self) -> &'static str {
        use gqe_core::Error as E;
        match self {
            CliError::Io { .. } => "io",
            CliError::Usage(_) => "usage",
            CliError::Core(e) => match e {
                E::Graph(_) | E::Violation(_) => "graph",
                E::Parse(_) => "parse",
                E::Engine(_) => "engine",
                E::Analytics(_) => "analytics",
                E::Neural(_) => "neural",
                E::Logic(_) => "logic",
                E::Xai(_) => "xai",
            },
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    fn to_json(&self) -> Value {
        let mut v = json!({"error": self.kind(), "message": self.to_string()});
        if let CliError::Core(gqe_core::Error::Engine(EngineError::CapExceeded(_))) = self {
            v["hint"] = json!("retry with --approx or a larger --cap");
        }
        v
    }
}

type Out = Sink<BufWriter<io::StdoutLock<'static>>>;

fn epsilon(s: &str) -> Result<f64, String> {
    let e: f64 = s.parse().map_err(|_| format!("{s} is not a number"))?;
    if e > 0.0 && e < 1.0 {
        Ok(e)
    } else {
        Err("epsilon must lie strictly between 0 and 1".into())
    }
}

fn bit(s: &str) -> Result<bool, String> {
    match s {
        "0" | "false" => Ok(false),
        "1" | "true" => Ok(true),
        _ => Err(format!("{s} is not 0 or 1")),
    }
}

fn read(path: &FsPath) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn load_graph(path: &FsPath) -> Result<Graph, CliError> {
    Ok(Graph::from_json(&read(path)?)?)
}

fn load_query(q: &QueryArgs) -> Result<(Graph, Regex), CliError> {
    let g = load_graph(&q.graph.graph)?;
    let r = parse_regex(&q.query, g.flavor())?;
    Ok((g, r))
}

fn node_ids(g: &Graph, nodes: impl IntoIterator<Item = NodeIx>) -> Vec<&str> {
    nodes.into_iter().map(|n| g.node_id(n)).collect()
}

fn check_len(k: usize) -> Result<(), CliError> {
    if k > MAX_LENGTH {
        return Err(EngineError::LengthTooLarge(k).into());
    }
    Ok(())
}

fn run(cli: Cli, out: &mut Out) -> Result<(), CliError> {
    let seed = cli.seed;
    let io_err = |source| CliError::Io { path: "<stdout>".into(), source };
    match cli.command {
        Command::Nodes { graph, test } => {
            let g = load_graph(&graph.graph)?;
            let t = parse_test(&test, g.flavor())?;
            for n in select_nodes(&g, &t) {
                out.emit(json!({"node": g.node_id(n)})).map_err(io_err)?;
            }
        }
        Command::Paths { q, max_len, limit } => {
            check_len(max_len)?;
            let (g, r) = load_query(&q)?;
            for p in enumerate(&g, &r, max_len)?.take(limit.unwrap_or(usize::MAX)) {
                out.emit(p.to_json(&g)).map_err(io_err)?;
            }
        }
        Command::Reach { q } => {
            let (g, r) = load_query(&q)?;
            for n in reachable_from(&g, &r) {
                out.emit(json!({"node": g.node_id(n)})).map_err(io_err)?;
            }
        }
        Command::Pairs { q } => {
            let (g, r) = load_query(&q)?;
            for (a, b) in pairs(&g, &r) {
                out.emit(json!({"src": g.node_id(a), "dst": g.node_id(b)})).map_err(io_err)?;
            }
        }
        Command::Count { q, len, approx, epsilon, cap } => {
            let (g, r) = load_query(&q)?;
            let req = CountRequest::new(&g, &r, len).epsilon(epsilon).seed(seed).cap(cap);
            if approx {
                let est = count_approx(&req)?;
                out.emit(json!({"estimate": est.estimate, "samples": est.samples, "epsilon": est.epsilon}))
                    .map_err(io_err)?;
            } else {
                let c = count_exact(&req)?;
                match u64::try_from(c) {
                    Ok(c) => out.emit(json!({"exact": c})),
                    Err(_) => out.emit_raw_json("exact", &c.to_string()),
                }
                .map_err(io_err)?;
            }
        }
        Command::Sample { q, len, samples, cap } => {
            let (g, r) = load_query(&q)?;
            let mut sampler = prepare_sampler_with_cap(&g, &r, len, seed, cap)?;
            for _ in 0..samples {
                out.emit(sampler.draw().to_json(&g)).map_err(io_err)?;
            }
        }
        Command::Centrality { graph, query, node, approx, epsilon } => {
            let g = load_graph(&graph.graph)?;
            let r = query.as_deref().map(|q| parse_regex(q, g.flavor())).transpose()?;
            let mode = if approx { Mode::Approximate { epsilon, seed } } else { Mode::Exact };
            let shown = |value: f64| {
                let mut v = json!({"bc": value});
                match mode {
                    Mode::Exact => v["mode"] = json!("exact"),
                    Mode::Approximate { epsilon, seed } => {
                        v["mode"] = json!("approximate");
                        v["epsilon"] = json!(epsilon);
                        v["seed"] = json!(seed);
                    }
                }
                if let Some(q) = &query {
                    v["regex"] = json!(q);
                }
                v
            };
            match node {
                Some(x) => {
                    let value = match (&r, approx) {
                        (None, _) => bc(&g, &x)?,
                        (Some(r), false) => bc_r(&g, &x, r)?,
                        (Some(r), true) => bc_r_approx(&g, &x, r, epsilon, seed)?,
                    };
                    let mut v = shown(value);
                    v["node"] = json!(x);
                    out.emit(v).map_err(io_err)?;
                }
                None => {
                    for row in centrality_table(&g, r.as_ref(), mode)? {
                        let mut v = shown(row.value);
                        v["node"] = json!(row.node);
                        out.emit(v).map_err(io_err)?;
                    }
                }
            }
        }
        Command::Gnn { graph, model, trace } => {
            let g = load_graph(&graph.graph)?;
            let gnn = Gnn::from_json(&read(&model)?)?;
            if trace {
                for (t, snap) in run_layers(&g, &gnn)?.iter().enumerate() {
                    let nodes: serde_json::Map<String, Value> =
                        g.nodes().map(|n| (g.node_id(n).to_string(), json!(snap[n]))).collect();
                    out.emit(json!({"layer": t, "features": nodes})).map_err(io_err)?;
                }
            }
            let yes = classify(&g, &gnn)?;
            out.emit(json!({"true": node_ids(&g, yes)})).map_err(io_err)?;
        }
        Command::Wl { graph, rounds, directed } => {
            let g = load_graph(&graph.graph)?;
            let colors = if directed { wl_colors_directed(&g, rounds) } else { wl_colors(&g, rounds) };
            for n in g.nodes() {
                let per_round: Vec<usize> = colors.iter().map(|round| round[n]).collect();
                out.emit(json!({"node": g.node_id(n), "colors": per_round})).map_err(io_err)?;
            }
        }
        Command::Fo2 { graph, formula, regex } => {
            let g = graph.as_deref().map(load_graph).transpose()?;
            let flavor = g.as_ref().map_or(Flavor::Labeled, Graph::flavor);
            let phi = match (&formula, &regex) {
                (Some(f), _) => parse_formula(f, flavor)?,
                (None, Some(r)) => {
                    let phi = regex_to_fo2(&parse_regex(r, flavor)?)?;
                    out.emit(json!({"formula": phi.to_string()})).map_err(io_err)?;
                    phi
                }
                (None, None) => return Err(CliError::Usage("give --formula or --regex".into())),
            };
            if let Some(g) = &g {
                emit_evaluation(out, g, &phi)?;
            }
        }
        Command::Xai { model, op } => {
            let m = DecisionModel::from_json(&read(&model)?)?;
            xai(out, &m, op)?;
        }
        Command::Convert { graph, rdf, to, columns } => {
            let converted = match (graph, rdf) {
                (_, Some(path)) => import_rdf(&parse_ntriples(&read(&path)?)?)?,
                (Some(path), None) => {
                    let g = load_graph(&path)?;
                    match to {
                        Target::Vector => g.to_vector_labeled(columns.as_deref())?,
                        Target::Property => g.to_property()?,
                    }
                }
                (None, None) => return Err(CliError::Usage("give --graph or --rdf".into())),
            };
            let doc = serde_json::to_value(converted.to_doc()).expect("graph documents always serialize");
            out.emit(doc).map_err(io_err)?;
        }
        Command::Validate { file, kind } => {
            let text = read(&file)?;
            match kind {
                Kind::Graph => GraphDoc::from_json(&text)?.validate()?,
                Kind::Gnn => drop(Gnn::from_json(&text)?),
                Kind::DecisionModel => drop(DecisionModel::from_json(&text)?),
            }
            out.emit(json!({"valid": true})).map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)
}

fn emit_evaluation(out: &mut Out, g: &Graph, phi: &gqe_core::Formula) -> Result<(), CliError> {
    let io_err = |source| CliError::Io { path: "<stdout>".into(), source };
    let free: Vec<String> = phi.free_vars().into_iter().collect();
    match eval(g, phi)? {
        Evaluation::Sentence(b) => out.emit(json!({"value": b})).map_err(io_err)?,
        Evaluation::Unary(set) => {
            for n in set {
                out.emit(json!({ free[0].as_str(): g.node_id(n) })).map_err(io_err)?;
            }
        }
        Evaluation::Binary(set) => {
            for (a, b) in set {
                out.emit(json!({ free[0].as_str(): g.node_id(a), free[1].as_str(): g.node_id(b) })).map_err(io_err)?;
            }
        }
    }
    Ok(())
}

fn xai(out: &mut Out, m: &DecisionModel, op: XaiOp) -> Result<(), CliError> {
    let io_err = |source| CliError::Io { path: "<stdout>".into(), source };
    let record = match op {
        XaiOp::Classify { instance } => json!({"class": m.classify(&parse_instance(&instance)?)? as u8}),
        XaiOp::Exists { target, partial } => {
            let found = m.exists_instance(target, &parse_instance(&partial)?)?;
            json!({"instance": found.as_ref().map(instance_json)})
        }
        XaiOp::Suffreason { target, partial } => {
            json!({"sufficient": m.is_sufficient_reason(&parse_instance(&partial)?, target)?})
        }
        XaiOp::Minreason { instance, minimum } => {
            let mode = if minimum { ReasonMode::MinimumCardinality } else { ReasonMode::SubsetMinimal };
            json!({"reason": instance_json(&m.minimal_sufficient_reason(&parse_instance(&instance)?, mode)?)})
        }
        XaiOp::Allminreasons { target } => {
            for r in m.all_minimal_sufficient_reasons(target)? {
                out.emit(json!({"reason": instance_json(&r)})).map_err(io_err)?;
            }
            return Ok(());
        }
        XaiOp::Bias { feature } => match m.is_biased(&feature)? {
            Some((a, b)) => json!({"biased": true, "witness": [instance_json(&a), instance_json(&b)]}),
            None => json!({"biased": false}),
        },
    };
    out.emit(record).map_err(io_err)
}

fn report(err: &CliError) -> ExitCode {
    eprintln!("{}", err.to_json());
    ExitCode::from(err.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let text = e.to_string();
            let summary = text.split("\n\nUsage:").next().unwrap_or_default();
            let summary = summary.trim_start_matches("error: ").split_whitespace().collect::<Vec<_>>().join(" ");
            return report(&CliError::Usage(summary));
        }
    };
    let format = cli.format;
    let mut out = Sink::new(BufWriter::new(io::stdout().lock()), format);
    match run(cli, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Io { source, .. }) if source.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            let _ = out.flush();
            report(&e)
        }
    }
}
