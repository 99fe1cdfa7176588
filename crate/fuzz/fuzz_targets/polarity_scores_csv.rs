#![no_main]

use contrarian::polarity::{read_item_scores, read_user_scores};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = read_user_scores(data);
    let _ = read_item_scores(data);
});
