#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(g) = hardy_graph::io::load_graph(text) else { return };
    // anything that validates must survive a save/load cycle unchanged
    let saved = hardy_graph::io::save_graph(&g);
    let back = hardy_graph::io::load_graph(&saved).expect("serialized graph parses");
    assert_eq!(back, g);
});
