#![no_main]
use libfuzzer_sys::fuzz_target;

use medgnn::model::parse_checkpoint;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(ckpt) = parse_checkpoint(text) {
        let again = parse_checkpoint(&ckpt.to_text()).expect("written checkpoint parses");
        assert_eq!(ckpt, again);
    }
});
