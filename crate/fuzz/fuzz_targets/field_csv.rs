#![no_main]

use libfuzzer_sys::fuzz_target;
use semicontrol::io::{diff_fields, parse_field_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = parse_field_csv(text) {
        // A table always matches itself exactly.
        let d = diff_fields(&table, &table).expect("self-diff");
        assert_eq!(d.max_abs, 0.0);
    }
});
