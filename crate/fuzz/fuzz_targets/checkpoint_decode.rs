#![no_main]

use libfuzzer_sys::fuzz_target;
use lexitopic::artifact::Checkpoint;

fuzz_target!(|data: &[u8]| {
    if let Ok(ckpt) = Checkpoint::from_bytes(data) {
        let bytes = ckpt.to_bytes();
        assert_eq!(Checkpoint::from_bytes(&bytes).expect("re-encoded checkpoint decodes"), ckpt);
        let _ = ckpt.sampler_state();
    }
});
