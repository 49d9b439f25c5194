#![no_main]

use libfuzzer_sys::fuzz_target;
use rtf_core::forest::{budget_from_string, ForestManifest};

// Manifest JSON plus the stringly encoded budget field, as on model load.
fuzz_target!(|data: &[u8]| {
    if let Ok(manifest) = serde_json::from_slice::<ForestManifest>(data) {
        let _ = budget_from_string(&manifest.budget);
    }
});
