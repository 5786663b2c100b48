#![no_main]

use libfuzzer_sys::fuzz_target;
use lexitopic::dictionary::parse_pairs;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(pairs) = parse_pairs(text) {
        assert!(pairs.len() <= text.lines().count());
        for (s, t) in &pairs {
            assert!(!s.contains('\t') && !t.contains('\t'));
        }
    }
});
