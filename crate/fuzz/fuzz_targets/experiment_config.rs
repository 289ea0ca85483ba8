#![no_main]

use colombeau_cli::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(c) = ExperimentConfig::from_json(s) {
        let _ = c.eps_grid();
        let text = serde_json::to_string(&c).expect("configs serialize");
        ExperimentConfig::from_json(&text).expect("serialized config parses");
    }
});
