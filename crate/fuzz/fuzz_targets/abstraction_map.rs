#![no_main]

use fcgprobe::embed::AbstractionMap;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(map) = AbstractionMap::parse(text) {
        let again = AbstractionMap::parse(&map.to_text()).unwrap();
        assert_eq!(again.to_text(), map.to_text());
        assert_eq!(again.state_count(), map.state_count());
    }
});
