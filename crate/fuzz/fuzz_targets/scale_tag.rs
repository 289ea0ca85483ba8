#![no_main]

use colombeau::ScaleFn;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(f) = ScaleFn::try_from(s.to_string()) {
        let back = ScaleFn::try_from(f.to_string()).expect("display round-trips");
        assert_eq!(f.to_string(), back.to_string());
    }
});
