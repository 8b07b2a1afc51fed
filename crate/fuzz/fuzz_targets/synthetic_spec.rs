#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = serde_json::from_str::<eass_core::synth::SyntheticSpec>(text) {
            let _ = spec.validate();
        }
    }
});
