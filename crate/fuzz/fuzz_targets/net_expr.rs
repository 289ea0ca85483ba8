#![no_main]

use colombeau::io::NetExpr;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(e) = NetExpr::parse(s) {
        let _ = e.eval(0.5);
        let _ = e.eval(1e-9);
    }
});
