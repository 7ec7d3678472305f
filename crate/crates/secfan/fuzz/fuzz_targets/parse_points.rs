#![no_main]

use libfuzzer_sys::fuzz_target;
use secfan::config::PointConfiguration;
use secfan::io;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(rows) = io::parse_points(text) {
        // Anything that parses must normalize without panicking.
        let _ = PointConfiguration::normalize(rows);
    }
});
