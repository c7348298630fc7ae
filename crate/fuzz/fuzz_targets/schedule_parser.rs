#![no_main]

use foliq::schedule::{all_faults, parse_schedule, validate, FrameLayout};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&shape, rest)) = data.split_first() else {
        return;
    };
    let layout = FrameLayout {
        ancillas: 1 + (shape & 3) as usize,
        width: 1 + (shape >> 2 & 7) as usize,
    };
    if let Ok(text) = std::str::from_utf8(rest) {
        if let Ok(s) = parse_schedule(text, layout) {
            let _ = validate(&s);
            let _ = all_faults(&s);
        }
    }
});
