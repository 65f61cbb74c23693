#![no_main]

use deadleaves::grains::{GrainLaw1D, GrainLaw2D};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(law) = serde_json::from_slice::<GrainLaw1D>(data) {
        if law.validate().is_ok() {
            assert!(law.lambda() > 0.0);
        }
    }
    if let Ok(law) = serde_json::from_slice::<GrainLaw2D>(data) {
        if let Ok(l) = law.build() {
            assert!(l.lambda() > 0.0);
        }
    }
});
