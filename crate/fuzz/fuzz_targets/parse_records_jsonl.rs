#![no_main]

use contrarian::ingest::{parse_records, write_records_jsonl, InputFormat};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(report) = parse_records(data, InputFormat::Jsonl) else {
        return;
    };
    // Accepted records survive a write/read cycle unchanged.
    let mut out = Vec::new();
    write_records_jsonl(&report.records, &mut out).unwrap();
    let again = parse_records(out.as_slice(), InputFormat::Jsonl).unwrap();
    assert_eq!(again.records, report.records);
    assert_eq!(again.malformed, 0);
});
