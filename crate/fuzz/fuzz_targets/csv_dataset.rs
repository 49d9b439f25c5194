#![no_main]

use libfuzzer_sys::fuzz_target;

// Dataset CSV decoding must reject arbitrary bytes without panicking.
fuzz_target!(|data: &[u8]| {
    let _ = rtf_core::data::from_csv_reader(data, "label");
});
