#![no_main]

use libfuzzer_sys::fuzz_target;
use secfan::config::{HullFaceLattice, PointConfiguration};
use secfan::enumerate::checkpoint_parse;
use secfan::symmetry::PermutationGroup;

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
    let lat = HullFaceLattice::build(&cfg).unwrap();
    let group =
        PermutationGroup::from_generators(&cfg, vec![vec![0, 3, 5, 1, 4, 2], vec![2, 4, 5, 1, 3, 0]])
            .unwrap();
    let _ = checkpoint_parse(text, &cfg, &lat, &group);
});
