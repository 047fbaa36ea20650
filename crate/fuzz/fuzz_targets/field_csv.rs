#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(field) = chemosim::field::parse_field_csv(text) {
            // accepted fields must survive a write/read cycle
            let again = chemosim::field::parse_field_csv(&field.to_csv()).expect("round trip");
            assert_eq!(again.values().len(), field.values().len());
            assert!(field.values().iter().all(|v| v.is_finite() && *v >= 0.0));
        }
    }
});
