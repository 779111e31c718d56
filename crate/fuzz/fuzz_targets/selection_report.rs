#![no_main]

use hybridcast::regsel::SelectionReport;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(report) = SelectionReport::from_json(text) {
        let mut csv = Vec::new();
        report.write_csv(&mut csv).expect("csv");
        assert!(report.selected_count() <= report.rows.len());
    }
});
