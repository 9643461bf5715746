#![no_main]

use libfuzzer_sys::fuzz_target;
use netdiff::netdata::parse_csv_matrix;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = parse_csv_matrix(text) {
            assert_eq!(m.as_slice().len(), m.p() * m.p());
        }
    }
});
