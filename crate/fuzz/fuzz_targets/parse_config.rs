#![no_main]

use libfuzzer_sys::fuzz_target;
use qcd_core::config::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = ExperimentConfig::from_json(text) {
            let again = ExperimentConfig::from_json(&cfg.to_json_pretty()).expect("round trip");
            assert_eq!(again, cfg);
        }
    }
});
