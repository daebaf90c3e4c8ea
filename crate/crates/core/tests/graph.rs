mod common;

use std::collections::BTreeSet;

use common::*;
use gqe_core::graph::{Model, NodeDoc};
use gqe_core::{enumerate, fixtures, Graph, GraphDoc, Path};
use proptest::prelude::*;
use rand::Rng;

fn with_props(g: &Graph, rng: &mut rand_chacha::ChaCha8Rng) -> Graph {
    let mut doc = g.to_doc();
    doc.model = Model::Property;
    for n in &mut doc.nodes {
        let mut props = std::collections::BTreeMap::new();
        for p in ["age", "zip"] {
            if rng.gen_bool(0.5) {
                props.insert(p.to_string(), rng.gen_range(1..4).to_string());
            }
        }
        n.props = Some(props);
    }
    for e in &mut doc.edges {
        e.props = Some(Default::default());
    }
    Graph::try_from(doc).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn json_round_trip(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let g = random_labeled(&mut rng, 6, 10);
        let back = Graph::from_json(&g.to_doc().to_json()).unwrap();
        prop_assert_eq!(back.to_doc(), g.to_doc());
    }

    #[test]
    fn vector_form_round_trips_and_keeps_labels(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let g = with_props(&random_labeled(&mut rng, 6, 10), &mut rng);
        let v = g.to_vector_labeled(None).unwrap();
        let columns = v.columns().unwrap().to_vec();
        prop_assert_eq!(&columns[0], "label");
        for n in g.nodes() {
            prop_assert_eq!(v.node(n).feature(1), g.node(n).label_atom());
            for (i, c) in columns.iter().enumerate().skip(1) {
                prop_assert_eq!(v.node(n).feature(i + 1), g.node(n).prop(c));
            }
        }
        prop_assert_eq!(v.to_property().unwrap().to_doc(), g.to_doc());
    }

    #[test]
    fn answers_follow_renaming(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let g = random_labeled(&mut rng, 5, 8);
        let r = random_regex(&mut rng, 3, true);
        let (h, map) = rename(&g, &mut rng);
        let shown = |g: &Graph, p: &Path, map: Option<&std::collections::BTreeMap<String, String>>| {
            let id = |s: &str| map.map_or(s.to_string(), |m| m.get(s).cloned().unwrap_or_else(|| s.to_string()));
            (p.nodes.iter().map(|&n| id(g.node_id(n))).collect::<Vec<_>>(),
             p.edges.iter().map(|&e| id(g.edge_id(e))).collect::<Vec<_>>())
        };
        let a: BTreeSet<_> = enumerate(&g, &r, 3).unwrap().map(|p| shown(&g, &p, Some(&map))).collect();
        let b: BTreeSet<_> = enumerate(&h, &r, 3).unwrap().map(|p| shown(&h, &p, None)).collect();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn fixtures_validate() {
    for text in [fixtures::FIG1A_JSON, fixtures::FIG1B_JSON, fixtures::FIG1C_JSON, fixtures::FIG2_JSON] {
        GraphDoc::from_json(text).unwrap().validate().unwrap();
    }
}

#[test]
fn duplicate_ids_are_rejected() {
    let mut doc = fixtures::fig1a().to_doc();
    doc.nodes.push(NodeDoc { id: "n1".into(), label: Some("person".into()), ..Default::default() });
    assert!(doc.validate().is_err());
    assert!(Graph::try_from(doc).is_err());
}
