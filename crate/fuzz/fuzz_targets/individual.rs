#![no_main]

use fcgprobe::genome::Individual;
use fcgprobe::graph::{load_fcg, GraphFormat};
use libfuzzer_sys::fuzz_target;

const BASE: &[u8] = br#"{"nodes":[
  {"id":0,"kind":"user","label":"app.a"},
  {"id":1,"kind":"user","label":"app.b"},
  {"id":2,"kind":"user","label":"app.c"},
  {"id":3,"kind":"system","label":"android.telephony.SmsManager.sendTextMessage"},
  {"id":4,"kind":"system","label":"java.net.URL.openConnection"}],
  "edges":[[0,1],[1,3],[2,4],[0,2]]}"#;

fuzz_target!(|data: &[u8]| {
    let Ok(ind) = serde_json::from_slice::<Individual>(data) else { return };
    let text = serde_json::to_vec(&ind).unwrap();
    assert_eq!(serde_json::from_slice::<Individual>(&text).unwrap(), ind);
    let base = load_fcg(BASE, GraphFormat::JsonGraph).unwrap();
    if let Ok(g) = ind.replay(&base) {
        g.validate().unwrap();
    }
});
