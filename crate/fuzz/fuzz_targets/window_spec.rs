#![no_main]

use libfuzzer_sys::fuzz_target;
use xychain::cli::parse_window;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((lo, hi)) = parse_window(text) {
        assert!(lo.is_finite() && hi.is_finite() && lo < hi);
    }
});
