#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(fuels) = eass_core::io::parse_fuel_table(text) {
            let back = eass_core::io::parse_fuel_table(&eass_core::io::write_fuel_table(&fuels));
            assert_eq!(back.expect("written fuel table parses"), fuels);
        }
    }
});
