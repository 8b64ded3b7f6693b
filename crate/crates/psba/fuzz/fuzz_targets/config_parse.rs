//! The config parser and the validator behind it must be total: any
//! input text yields Ok or a structured error, never a panic.

#![no_main]

use libfuzzer_sys::fuzz_target;
use psba::config::{parse_config_str, RunConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(partial) = parse_config_str(text) {
        let _ = RunConfig::build(partial);
    }
});
