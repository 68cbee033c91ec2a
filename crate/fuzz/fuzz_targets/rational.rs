#![no_main]

use libfuzzer_sys::fuzz_target;
use semicontrol::analysis::parse_rational;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // Long digit strings are fine; they only grow the bigint.
        if text.len() <= 256 {
            let _ = parse_rational(text);
        }
    }
});
