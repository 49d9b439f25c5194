#![no_main]

use libfuzzer_sys::fuzz_target;

// Experiment configs are user-authored JSON; validation must never panic.
fuzz_target!(|data: &[u8]| {
    let _ = rtf_cli::config::parse_experiment_config(data);
});
