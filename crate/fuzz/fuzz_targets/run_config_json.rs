#![no_main]

use contrarian::pipeline::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(json) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = RunConfig::from_json(json) {
        let back = serde_json::to_string(&config).unwrap();
        assert_eq!(RunConfig::from_json(&back).unwrap(), config);
    }
});
