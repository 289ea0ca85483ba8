#![no_main]

use colombeau::symbols::SymbolFamily;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(a) = s.parse::<SymbolFamily>() {
        let back: SymbolFamily = a.to_string().parse().expect("display round-trips");
        assert_eq!(a, back);
        if let Some(d) = a.dim() {
            let _ = a.eval(0.1, &vec![0.3; d], &vec![2.0; d]);
        } else {
            let _ = a.eval(0.1, &[0.3], &[2.0]);
        }
    }
});
