#![no_main]
use libfuzzer_sys::fuzz_target;

use medgnn::harness::{parse_signals, write_signals};

fuzz_target!(|data: &[u8]| {
    let Some((&features, rest)) = data.split_first() else {
        return;
    };
    let Ok(text) = std::str::from_utf8(rest) else {
        return;
    };
    let features = usize::from(features % 4) + 1;
    if let Ok(samples) = parse_signals(text, features) {
        let again = parse_signals(&write_signals(&samples), features).expect("written signals parse");
        assert_eq!(samples, again);
    }
});
