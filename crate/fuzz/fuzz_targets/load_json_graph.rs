#![no_main]

use fcgprobe::embed::{Embedder, Scheme};
use fcgprobe::graph::{load_fcg, save_fcg, GraphFormat, SensitiveApiIndex};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(g) = load_fcg(data, GraphFormat::JsonGraph) else { return };
    let again = load_fcg(&save_fcg(&g, GraphFormat::JsonGraph), GraphFormat::JsonGraph).unwrap();
    assert_eq!(g, again);
    // Keep centrality work bounded; the decoder is the target here.
    if g.node_count() <= 64 {
        let apis: Vec<String> = g.nodes().take(4).map(|r| r.label.clone()).collect();
        if let Ok(apis) = SensitiveApiIndex::new(apis) {
            for scheme in [Scheme::Degree, Scheme::Katz, Scheme::Closeness, Scheme::Harmonic] {
                let _ = Embedder::new(scheme, apis.clone()).embed(&g);
            }
        }
    }
});
