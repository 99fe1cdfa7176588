#![no_main]

use contrarian::ingest::normalize_item;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(raw) = std::str::from_utf8(data) else {
        return;
    };
    if let Some(id) = normalize_item(raw) {
        assert_eq!(normalize_item(&id).as_deref(), Some(id.as_str()), "not idempotent");
    }
});
