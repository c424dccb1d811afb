#![no_main]

use libfuzzer_sys::fuzz_target;
use xychain::EncodingState;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(enc) = EncodingState::from_json(text) {
        // accepted encodings survive a round trip
        let again = EncodingState::from_json(&enc.to_json()).expect("re-parse");
        assert_eq!(again.n_sites(), enc.n_sites());
        assert_eq!(again.amplitudes().len(), enc.amplitudes().len());
        assert!((again.norm_sqr() - 1.0).abs() < 1e-9);
    }
});
