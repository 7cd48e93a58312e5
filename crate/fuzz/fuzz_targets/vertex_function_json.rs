#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let g = hardy_graph::generate::path(4, true, false).expect("fixed instance");
    let _ = hardy_graph::io::parse_vertex_function(&g, text);
});
