#![no_main]

use libfuzzer_sys::fuzz_target;

// Cut logs come from disk on model load; parsing must only ever return a
// structured error on junk input.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = rtf_core::tessellation::parse_cut_log(text);
    }
});
