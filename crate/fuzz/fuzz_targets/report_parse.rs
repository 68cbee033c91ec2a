#![no_main]

use libfuzzer_sys::fuzz_target;
use semicontrol::io::Report;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(report) = Report::parse(text) {
        let again = Report::parse(&report.render()).expect("rendered report parses");
        assert_eq!(again, report);
    }
});
