#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(t) = eass_core::io::parse_temperature_csv(text) {
            let again = eass_core::io::write_temperature_csv(t.start, t.step_minutes, &t.values);
            assert_eq!(eass_core::io::parse_temperature_csv(&again).expect("written temperature parses"), t);
        }
    }
});
