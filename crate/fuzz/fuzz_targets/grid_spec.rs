#![no_main]

use libfuzzer_sys::fuzz_target;
use xychain::cli::{parse_grid, MAX_POINTS};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(grid) = parse_grid(text) {
        assert!(!grid.is_empty() && grid.len() <= MAX_POINTS);
        assert!(grid.iter().all(|x| x.is_finite()));
        assert!(grid.windows(2).all(|w| w[0] <= w[1]));
    }
});
