#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(sweep) = chemosim::harness::parse_sweep_config(text) {
            let n = sweep.len();
            assert!(n >= 1 && n <= sweep.max_runs);
            let _ = sweep.point(n - 1);
        }
    }
});
