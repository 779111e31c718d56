#![no_main]

use hybridcast::pipeline::Checkpoint;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(ckpt) = Checkpoint::from_json(text) {
        let again = Checkpoint::from_json(&ckpt.to_json().expect("serialize")).expect("reparse");
        assert_eq!(again.model.to_record(), ckpt.model.to_record());
    }
});
