#![no_main]

use hybridcast::pipeline::parse_csv_series;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(frag) = parse_csv_series(data, "date", &[]) {
        assert!(frag.dates.windows(2).all(|w| w[0] < w[1]));
        assert!(frag.columns.iter().all(|c| c.len() == frag.dates.len()));
        assert!(frag.columns.iter().flatten().flatten().all(|v| v.is_finite()));
    }
});
