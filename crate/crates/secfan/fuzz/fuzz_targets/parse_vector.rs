#![no_main]

use libfuzzer_sys::fuzz_target;
use secfan::io;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(v) = io::parse_vector(text) {
        // Round trip: formatting a parsed vector must parse back to
        // the same entries.
        let again = io::parse_vector(&io::format_vector(&v)).unwrap();
        assert_eq!(v, again);
    }
});
