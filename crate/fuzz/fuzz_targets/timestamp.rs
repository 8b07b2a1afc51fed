#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Some(t) = eass_core::io::parse_timestamp(text) {
            let formatted = eass_core::io::format_timestamp(t);
            let back = eass_core::io::parse_timestamp(&formatted).expect("formatted timestamp parses");
            assert_eq!(back.and_utc().timestamp(), t.and_utc().timestamp());
        }
    }
});
