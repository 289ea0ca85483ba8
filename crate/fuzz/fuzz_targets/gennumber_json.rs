#![no_main]

use colombeau::io::{gennumber_from_json, gennumber_to_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(u) = gennumber_from_json(s) {
        let text = gennumber_to_json(&u).expect("valid nets serialize");
        let v = gennumber_from_json(&text).expect("written JSON parses");
        assert_eq!(u.values(), v.values());
    }
});
