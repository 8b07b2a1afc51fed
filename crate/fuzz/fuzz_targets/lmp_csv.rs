#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(t) = eass_core::io::parse_lmp_csv(text) {
            let back = eass_core::io::parse_lmp_csv(&eass_core::io::write_lmp_csv(t.start, t.prices.values()));
            assert_eq!(back.expect("written lmp csv parses"), t);
        }
    }
});
