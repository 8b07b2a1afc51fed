#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(model) = eass_core::forecast::ForecastModel::from_json(text) {
            let again = model.to_json().expect("model serializes");
            assert_eq!(eass_core::forecast::ForecastModel::from_json(&again).expect("round trip"), model);
        }
    }
});
