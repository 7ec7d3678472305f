#![no_main]

use libfuzzer_sys::fuzz_target;
use secfan::config::PointConfiguration;
use secfan::io;
use secfan::symmetry::PermutationGroup;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(perms) = io::parse_group(text) {
        // Feed the parsed rows on to group construction over a small
        // fixed configuration; bad images must error, not panic.
        let cfg = PointConfiguration::normalize(vec![
            vec![0, 0],
            vec![0, 1],
            vec![0, 2],
            vec![1, 0],
            vec![1, 1],
            vec![2, 0],
        ])
        .unwrap();
        let _ = PermutationGroup::from_generators(&cfg, perms);
    }
});
