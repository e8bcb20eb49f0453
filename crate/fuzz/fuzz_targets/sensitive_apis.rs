#![no_main]

use fcgprobe::graph::SensitiveApiIndex;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(idx) = SensitiveApiIndex::parse(text) {
        assert_eq!(SensitiveApiIndex::parse(&idx.to_text()).unwrap(), idx);
    }
});
