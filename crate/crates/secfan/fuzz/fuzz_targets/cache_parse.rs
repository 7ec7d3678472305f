#![no_main]

use libfuzzer_sys::fuzz_target;
use secfan::config::PointConfiguration;
use secfan::massive::ContributionCache;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let cfg = PointConfiguration::normalize(vec![
        vec![0, 0],
        vec![0, 1],
        vec![0, 2],
        vec![1, 0],
        vec![1, 1],
        vec![2, 0],
    ])
    .unwrap();
    let _ = ContributionCache::parse(text, &cfg);
});
