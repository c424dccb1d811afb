#![no_main]

use libfuzzer_sys::fuzz_target;
use xychain::cli::{parse_list, MAX_POINTS};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(list) = parse_list(text) {
        assert!(!list.is_empty() && list.len() <= MAX_POINTS);
        assert!(list.iter().all(|&n| n > 0));
    }
});
