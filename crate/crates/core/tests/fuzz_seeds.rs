//! Every checked-in fuzz seed must decode and satisfy the round-trip
//! property its fuzz target asserts.

use std::fs;
use std::path::PathBuf;

use fcgprobe::embed::AbstractionMap;
use fcgprobe::experiment::TrainedTarget;
use fcgprobe::genome::Individual;
use fcgprobe::graph::{load_fcg, save_fcg, GraphFormat, SensitiveApiIndex};
use fcgprobe::metrics::MetricsReport;
use fcgprobe::models::{model_load, model_save};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn text(bytes: &[u8]) -> &str {
    std::str::from_utf8(bytes).unwrap()
}

#[test]
fn json_graph_seeds() {
    for (name, bytes) in seeds("load_json_graph") {
        let g = load_fcg(&bytes, GraphFormat::JsonGraph).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(load_fcg(&save_fcg(&g, GraphFormat::JsonGraph), GraphFormat::JsonGraph).unwrap(), g, "{name}");
    }
}

#[test]
fn edge_list_seeds() {
    let prefixes = vec!["android.".to_owned(), "java.".to_owned()];
    let format = || GraphFormat::EdgeList { system_prefixes: &prefixes };
    for (name, bytes) in seeds("load_edge_list") {
        let g = load_fcg(&bytes, format()).unwrap_or_else(|e| panic!("{name}: {e}"));
        let again = load_fcg(&save_fcg(&g, format()), format()).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (again.node_count(), again.edge_count()), "{name}");
    }
}

#[test]
fn sensitive_api_seeds() {
    for (name, bytes) in seeds("sensitive_apis") {
        let idx = SensitiveApiIndex::parse(text(&bytes)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(!idx.is_empty(), "{name}");
        assert_eq!(SensitiveApiIndex::parse(&idx.to_text()).unwrap(), idx, "{name}");
    }
}

#[test]
fn abstraction_map_seeds() {
    for (name, bytes) in seeds("abstraction_map") {
        let map = AbstractionMap::parse(text(&bytes)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(AbstractionMap::parse(&map.to_text()).unwrap().to_text(), map.to_text(), "{name}");
    }
}

#[test]
fn model_seeds() {
    for (name, bytes) in seeds("model_load") {
        let m = model_load(&bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(model_load(&model_save(&m)).unwrap(), m, "{name}");
    }
}

#[test]
fn trained_target_seeds() {
    for (name, bytes) in seeds("trained_target") {
        let t = TrainedTarget::from_json(&bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
        t.model.predict(&vec![0.5; t.model.input_dim()]).unwrap();
    }
}

#[test]
fn individual_seeds() {
    for (name, bytes) in seeds("individual") {
        let ind: Individual = serde_json::from_slice(&bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(!ind.is_empty(), "{name}");
    }
}

#[test]
fn metrics_seeds() {
    for (name, bytes) in seeds("metrics_report") {
        let r = MetricsReport::from_json(&bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
        r.verify().unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(MetricsReport::from_json(&r.to_json()).unwrap(), r, "{name}");
    }
}
