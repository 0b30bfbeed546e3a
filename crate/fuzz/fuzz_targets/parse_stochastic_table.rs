#![no_main]

use libfuzzer_sys::fuzz_target;
use qcd_core::io::{parse_stochastic_table, stochastic_table_json};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(table) = parse_stochastic_table(text) {
            let json = stochastic_table_json(&table).expect("serializable");
            parse_stochastic_table(&json).expect("round trip");
        }
    }
});
