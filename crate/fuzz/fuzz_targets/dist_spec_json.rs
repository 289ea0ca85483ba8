#![no_main]

use colombeau::DistSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(d) = DistSpec::from_json(s) {
        let _ = d.validate();
        let _ = d.singular_support();
    }
});
