#![no_main]

use libfuzzer_sys::fuzz_target;
use qcd_core::io::{limited_table_json, parse_limited_table};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(table) = parse_limited_table(text) {
            let json = limited_table_json(&table).expect("serializable");
            parse_limited_table(&json).expect("round trip");
        }
    }
});
