#![no_main]

use libfuzzer_sys::fuzz_target;
use netdiff::netdata::parse_manifest;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        for path in parse_manifest(text) {
            assert!(!path.as_os_str().is_empty());
        }
    }
});
