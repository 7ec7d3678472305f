#![no_main]

use libfuzzer_sys::fuzz_target;
use secfan::io;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(v) = io::parse_rational_vector(text) {
        let again = io::parse_rational_vector(&io::format_rational_vector(&v)).unwrap();
        assert_eq!(v, again);
    }
});
