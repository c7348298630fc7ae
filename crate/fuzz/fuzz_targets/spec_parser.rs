#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = foliq::specfile::parse_spec(text) {
            // Keep builds small; large sizes only slow the fuzzer down.
            let _ = spec.build(Some(4));
        }
    }
});
