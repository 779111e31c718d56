#![no_main]

use hybridcast::pipeline::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::from_json(text) {
        let again = serde_json::to_string(&cfg).expect("serialize");
        assert_eq!(ExperimentConfig::from_json(&again).expect("reparse"), cfg);
    }
});
