#![no_main]

use contrarian::ingest::{read_item_pool_jsonl, write_item_pool_jsonl};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(pool) = read_item_pool_jsonl(data) else {
        return;
    };
    let mut out = Vec::new();
    write_item_pool_jsonl(&pool, &mut out).unwrap();
    assert_eq!(read_item_pool_jsonl(out.as_slice()).unwrap(), pool);
});
