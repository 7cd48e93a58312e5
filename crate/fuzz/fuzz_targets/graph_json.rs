#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // parsing and validation must never panic on arbitrary input
        let _ = hardy_graph::io::load_graph(text);
    }
});
