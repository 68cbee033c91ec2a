#![no_main]

use libfuzzer_sys::fuzz_target;
use semicontrol_cli::expr::Expr;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(e) = Expr::parse(text) {
        assert_eq!(Expr::parse(&e.to_string()), Ok(e));
    }
});
