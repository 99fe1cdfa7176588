#![no_main]

use contrarian::ranking::read_lists;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = read_lists(data);
});
