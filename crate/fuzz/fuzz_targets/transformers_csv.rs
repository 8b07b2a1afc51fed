#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(rows) = eass_core::io::parse_transformers_csv(text) {
            let back = eass_core::io::parse_transformers_csv(&eass_core::io::write_transformers_csv(&rows));
            assert_eq!(back.expect("written transformers parse"), rows);
        }
    }
});
