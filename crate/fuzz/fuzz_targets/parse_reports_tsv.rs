#![no_main]

use libfuzzer_sys::fuzz_target;
use netdiff::harness::{emit_reports, parse_reports, ReportFormat};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(reports) = parse_reports(text, ReportFormat::Tsv) {
            // anything accepted is stable under a second round trip
            let once = emit_reports(&reports, ReportFormat::Tsv).unwrap();
            let again = parse_reports(&once, ReportFormat::Tsv).unwrap();
            assert_eq!(emit_reports(&again, ReportFormat::Tsv).unwrap(), once);
        }
    }
});
