#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = eass_core::config::RunConfig::from_json(text) {
            let again = cfg.to_json().expect("config serializes");
            assert_eq!(eass_core::config::RunConfig::from_json(&again).expect("round trip"), cfg);
        }
    }
});
