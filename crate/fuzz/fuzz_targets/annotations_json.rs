#![no_main]

use contrarian::ranking::parse_annotations;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(body) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(terms) = parse_annotations(body) {
        assert!(terms.iter().all(|t| !t.is_empty() && !t.contains(char::is_whitespace)));
    }
});
