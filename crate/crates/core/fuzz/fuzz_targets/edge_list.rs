#![no_main]
use libfuzzer_sys::fuzz_target;

use medgnn::harness::{parse_edge_list, write_edge_list};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(g) = parse_edge_list(text) {
        let again = parse_edge_list(&write_edge_list(&g)).expect("written edge list parses");
        assert_eq!(g, again);
    }
});
