#![no_main]

use libfuzzer_sys::fuzz_target;

// The drift-spec parser must reject arbitrary bytes gracefully, and
// accepted specs must survive the classification pipeline.
fuzz_target!(|data: &[u8]| {
    if let Ok(spec) = sepfp::io::parse_drift_spec(data) {
        if let Ok(class) = sepfp::drift::classify(&spec, 1e-9) {
            if class.is_separable() {
                let _ = sepfp::drift::reconstruct(&class);
                let _ = sepfp::drift::admissible_charts(&class);
            }
        }
    }
});
