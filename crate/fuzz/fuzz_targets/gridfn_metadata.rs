#![no_main]

use colombeau::io::GridFnMeta;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(m) = GridFnMeta::parse(s) {
        for f in &m.files {
            assert!(!f.is_empty() && !f.contains('/') && !f.starts_with('.'));
        }
    }
});
