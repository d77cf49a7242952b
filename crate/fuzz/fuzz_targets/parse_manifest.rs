#![no_main]

use libfuzzer_sys::fuzz_target;

// Accepted manifests must round-trip bit-exactly through the
// deterministic writer.
fuzz_target!(|data: &[u8]| {
    if let Ok(manifest) = sepfp::io::parse_manifest(data) {
        let rendered = sepfp::io::manifest_json(&manifest);
        let back =
            sepfp::io::parse_manifest(rendered.as_bytes()).expect("rendered manifest must reparse");
        assert_eq!(back, manifest);
    }
});
