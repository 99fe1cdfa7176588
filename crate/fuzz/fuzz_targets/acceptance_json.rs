#![no_main]

use contrarian::acceptance::AcceptanceModel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(json) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(model) = AcceptanceModel::from_json(json) {
        // Every bucket pair of a loaded model is queryable.
        for i in 0..model.buckets {
            for j in 0..model.buckets {
                let p = model.prob_at(i, j);
                assert!((0.0..=1.0).contains(&p), "{p}");
            }
        }
    }
});
