#![no_main]

use libfuzzer_sys::fuzz_target;
use netdiff::harness::parse_config;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = parse_config(text) {
            for entry in &cfg.scenario {
                let _ = entry.resolve(cfg.seed);
            }
        }
    }
});
