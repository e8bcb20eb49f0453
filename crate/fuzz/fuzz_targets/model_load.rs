#![no_main]

use fcgprobe::models::{model_load, model_save};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = model_load(data) {
        let bytes = model_save(&m);
        assert_eq!(model_load(&bytes).unwrap(), m);
        let x = vec![0.5; m.input_dim()];
        let _ = m.predict(&x);
    }
});
