#![no_main]

use libfuzzer_sys::fuzz_target;
use lexitopic::corpus::{build_vocabulary, invert_index, parse_corpus};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(corpus) = parse_corpus(text, "fuzz", 1) else { return };
    let vocab = build_vocabulary(&corpus);
    let pdocs = invert_index(&corpus, &vocab).expect("parsed corpus inverts");
    assert_eq!(pdocs.num_tokens(), corpus.num_tokens());
    assert_eq!(pdocs.num_words(), vocab.len());
});
