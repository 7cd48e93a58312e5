#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if text.len() > 256 {
        return; // keep generated sizes bounded
    }
    if let Ok(spec) = hardy_graph::generate::parse_generator_spec(text) {
        let _ = hardy_graph::generate::generate(&spec);
    }
});
