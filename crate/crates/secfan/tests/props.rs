//! Property suites: text format round-trips, and the two-way bridge
//! between height functions and triangulations checked against the
//! independent lower-hull builder.

mod common;

use common::*;
use num::{BigRational, FromPrimitive, Zero};
use proptest::prelude::*;
use secfan::config::mc_count;
use secfan::io;
use secfan::massive::{eta_cached, eta_direct, ContributionCache};
use secfan::regularity::{certificate_check, is_regular};
use secfan::symmetry::PermutationGroup;
use secfan::triang::{hull_volume, placing_triangulation, Triangulation};

proptest! {
    #[test]
    fn vector_text_round_trips(v in prop::collection::vec(-1_000_000i64..1_000_000, 1..12)) {
        let line = io::format_vector(&v);
        prop_assert_eq!(io::parse_vector(&line).unwrap(), v);
    }

    #[test]
    fn rational_vector_text_round_trips(
        pairs in prop::collection::vec((-1000i64..1000, 1i64..60), 1..10)
    ) {
        let v: Vec<BigRational> = pairs.iter().map(|&(n, d)| rat(n, d)).collect();
        let line = io::format_rational_vector(&v);
        prop_assert_eq!(io::parse_rational_vector(&line).unwrap(), v);
    }

    /// Integer heights lift the configuration to a lower hull; the
    /// induced triangulation must be accepted by the library as
    /// regular, the produced certificate must induce the same
    /// triangulation back through the independent builder, and the
    /// original heights must pass the full inequality check.
    #[test]
    fn heights_round_trip_through_regularity(hs in prop::collection::vec(-12i64..12, 6)) {
        let pts = d2_points();
        let heights: Vec<BigRational> =
            hs.iter().map(|&h| BigRational::from_i64(h).unwrap()).collect();
        let cells = subdivision_from_heights(&pts, &heights);
        prop_assume!(cells.is_some());
        let cells = cells.unwrap();
        let vol: i64 = cells.iter().map(|c| ambient_volume(&pts, c)).sum();
        prop_assert_eq!(vol, ambient_hull_volume(&pts));
        let (cfg, lat) = ctx(&pts);
        let t = Triangulation::validate(&cfg, &lat, cells.clone()).unwrap();
        let line = t.to_string();
        let parsed = io::parse_triangulation(&line).unwrap();
        prop_assert_eq!(
            parsed,
            t.cells().iter().map(|c| c.vertices().to_vec()).collect::<Vec<_>>()
        );
        let cert = is_regular(&cfg, &t).unwrap().expect("a lower hull is regular");
        let again = subdivision_from_heights(&pts, &cert.heights)
            .expect("certificates hold strictly");
        prop_assert_eq!(again, cells);
        let margin = certificate_check(&cfg, &t, &heights).unwrap();
        prop_assert!(margin.expect("the inducing heights certify") > BigRational::zero());
    }

    /// Same bridge on a skewed quadrilateral with an interior point,
    /// exercising non-simplex hulls and unused points.
    #[test]
    fn heights_round_trip_on_a_quadrilateral(hs in prop::collection::vec(-9i64..9, 5)) {
        let pts = vec![vec![0, 0], vec![3, 0], vec![1, 2], vec![0, 2], vec![1, 1]];
        let heights: Vec<BigRational> =
            hs.iter().map(|&h| BigRational::from_i64(h).unwrap()).collect();
        let cells = subdivision_from_heights(&pts, &heights);
        prop_assume!(cells.is_some());
        let cells = cells.unwrap();
        let (cfg, lat) = ctx(&pts);
        let t = Triangulation::validate(&cfg, &lat, cells.clone()).unwrap();
        let cert = is_regular(&cfg, &t).unwrap().expect("a lower hull is regular");
        let again = subdivision_from_heights(&pts, &cert.heights)
            .expect("certificates hold strictly");
        prop_assert_eq!(again, cells);
    }
}

#[test]
fn placing_triangulations_are_regular_and_engines_agree() {
    for pts in random_configs(7, 25) {
        let (cfg, lat) = ctx(&pts);
        let t = placing_triangulation(&cfg);
        let vol: u64 = t.cells().iter().map(|c| cfg.lattice_volume(c).unwrap()).sum();
        assert_eq!(vol, hull_volume(&cfg), "{pts:?}");
        assert!(is_regular(&cfg, &t).unwrap().is_some(), "{pts:?}");
        let mc = mc_count(&lat).unwrap();
        let cache = ContributionCache::new();
        assert_eq!(
            eta_direct(&cfg, &lat, &t).unwrap(),
            eta_cached(&cfg, &lat, &mc, &cache, &t).unwrap(),
            "{pts:?}"
        );
    }
}

#[test]
fn batch_text_survives_comments_and_blank_lines() {
    let pts = d2_points();
    let (cfg, _) = ctx(&pts);
    let trivial = PermutationGroup::trivial(cfg.n());
    let all = enumerate_all(&cfg, &trivial);
    assert_eq!(all.len(), 14);
    let mut text = String::from("# every triangulation, one per line\n\n");
    for (t, _) in &all {
        text.push_str(&format!("{t}\n"));
    }
    let parsed = io::parse_batch(&text).unwrap();
    assert_eq!(parsed.len(), 14);
    for ((lineno, cells), (t, _)) in parsed.iter().zip(&all) {
        assert!(*lineno >= 3);
        assert_eq!(
            cells,
            &t.cells().iter().map(|c| c.vertices().to_vec()).collect::<Vec<_>>()
        );
    }
}
