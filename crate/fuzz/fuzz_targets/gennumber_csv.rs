#![no_main]

use colombeau::io::{read_gennumber_csv, write_gennumber_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(u) = read_gennumber_csv(data) {
        let mut out = Vec::new();
        write_gennumber_csv(&u, &mut out).expect("valid nets serialize");
        let v = read_gennumber_csv(out.as_slice()).expect("written CSV parses");
        assert_eq!(u.values(), v.values());
    }
});
