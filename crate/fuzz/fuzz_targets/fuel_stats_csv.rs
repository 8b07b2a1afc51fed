#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(t) = eass_core::io::parse_fuel_stats_csv(text) {
            let back = eass_core::io::parse_fuel_stats_csv(&eass_core::io::write_fuel_stats_csv(&t));
            assert_eq!(back.expect("written fuel stats parse"), t);
        }
    }
});
