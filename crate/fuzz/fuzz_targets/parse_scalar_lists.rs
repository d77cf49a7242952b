#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = sepfp::io::parse_f64_list(text);
        let _ = sepfp::io::parse_lambda(text);
        let _ = sepfp::charts::ChartId::parse(text);
    }
});
