#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(table) = eass_core::io::parse_load_csv(text) {
            let again = eass_core::io::write_load_csv(table.start, &table.grid, &table.series);
            let back = eass_core::io::parse_load_csv(&again).expect("written load csv parses");
            assert_eq!(back.series, table.series);
        }
    }
});
