#![no_main]

use contrarian::ingest::{parse_records, InputFormat};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = parse_records(data, InputFormat::Csv);
});
