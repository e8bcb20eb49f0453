#![no_main]

use fcgprobe::metrics::MetricsReport;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(report) = MetricsReport::from_json(data) else { return };
    let _ = report.verify();
    let _ = report.render();
    let back = MetricsReport::from_json(&report.to_json()).unwrap();
    assert_eq!(back.rows, report.rows);
});
