#![no_main]

use fcgprobe::graph::{load_fcg, save_fcg, GraphFormat};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let prefixes = vec!["android.".to_owned(), "java.".to_owned()];
    let format = || GraphFormat::EdgeList { system_prefixes: &prefixes };
    let Ok(g) = load_fcg(data, format()) else { return };
    let again = load_fcg(&save_fcg(&g, format()), format()).unwrap();
    assert_eq!((g.node_count(), g.edge_count()), (again.node_count(), again.edge_count()));
});
