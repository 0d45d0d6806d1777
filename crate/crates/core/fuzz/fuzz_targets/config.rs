#![no_main]
use libfuzzer_sys::fuzz_target;

use medgnn::harness::parse_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = parse_config(text) {
        assert_eq!(parse_config(&cfg.to_text()).expect("written config parses"), cfg);
    }
});
