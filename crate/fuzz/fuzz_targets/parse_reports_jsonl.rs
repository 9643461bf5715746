#![no_main]

use libfuzzer_sys::fuzz_target;
use netdiff::harness::{emit_reports, parse_reports, ReportFormat};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(reports) = parse_reports(text, ReportFormat::Jsonl) {
            // anything accepted is stable under a second round trip
            let once = emit_reports(&reports, ReportFormat::Jsonl).unwrap();
            let again = parse_reports(&once, ReportFormat::Jsonl).unwrap();
            assert_eq!(emit_reports(&again, ReportFormat::Jsonl).unwrap(), once);
        }
    }
});
