#![no_main]

use libfuzzer_sys::fuzz_target;
use sepfp::algebra3::Vec3;

fuzz_target!(|data: &[u8]| {
    if let Ok(field) = sepfp::io::parse_field(data) {
        for x in [Vec3::ZERO, Vec3::new(0.5, -0.5, 1.0)] {
            let _ = field.eval(x);
            let _ = sepfp::rsep::curl_at(&field, &x, 1e-4);
        }
    }
});
