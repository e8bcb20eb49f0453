#![no_main]

use fcgprobe::experiment::TrainedTarget;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(t) = TrainedTarget::from_json(data) {
        let _ = t.model.predict(&vec![0.5; t.model.input_dim()]);
        let _ = t.target();
    }
});
