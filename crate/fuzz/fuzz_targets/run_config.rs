#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = chemosim::harness::parse_run_config(text) {
            let json = serde_json::to_string(&cfg).expect("serializable");
            let back = chemosim::harness::parse_run_config(&json).expect("round trip");
            assert_eq!(back.grid, cfg.grid);
        }
    }
});
