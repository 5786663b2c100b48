#![no_main]

use libfuzzer_sys::fuzz_target;
use lexitopic::artifact::IndexArtifact;

fuzz_target!(|data: &[u8]| {
    if let Ok(index) = IndexArtifact::from_bytes(data) {
        let bytes = index.artifact.to_bytes();
        let again = IndexArtifact::from_bytes(&bytes).expect("re-encoded index decodes");
        assert_eq!(again.artifact, index.artifact);
    }
});
