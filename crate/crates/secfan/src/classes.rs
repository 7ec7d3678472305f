//! Equivalence classes of regular triangulations under the massive
//! GKZ vector.
//!
//! Two regular triangulations are equivalent when their massive GKZ
//! vectors coincide; the distinct vectors are exactly the vertices of
//! a Newton polytope, which vertex_certify checks directly. Counting
//! works on orbit representatives only: each representative's vector
//! is expanded to its orbit {g·eta}, and class sizes follow from
//! stabilizer orders, so the full set of triangulations is never
//! materialized.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use crate::config::{ChainCountTable, HullFaceLattice, PointConfiguration};
use crate::io;
use crate::lp::{self, LpOutcome};
use crate::massive::{eta_cached, ContributionCache, MassiveError};
use crate::symmetry::PermutationGroup;
use crate::triang::Triangulation;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassEntry {
    /// Orbit representatives whose vector orbit contains this vector.
    pub representatives: u64,
    /// One triangulation carrying this exact vector.
    pub witness: Triangulation,
    /// All triangulations carrying this exact vector.
    pub triangulations: u64,
}

/// Distinct massive GKZ vectors with witnesses and sizes. Keys are a
/// union of vector orbits, so the set is stable under the group.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct ClassTable {
    entries: BTreeMap<Vec<i64>, ClassEntry>,
}

impl ClassTable {
    /// Number of equivalence classes.
    pub fn classes(&self) -> u64 {
        self.entries.len() as u64
    }

    /// Total triangulation count, summed over classes.
    pub fn triangulations(&self) -> u64 {
        self.entries.values().map(|e| e.triangulations).sum()
    }

    pub fn get(&self, v: &[i64]) -> Option<&ClassEntry> {
        self.entries.get(v)
    }

    /// Entries in lexicographically descending vector order.
    pub fn entries_desc(&self) -> impl Iterator<Item = (&Vec<i64>, &ClassEntry)> {
        self.entries.iter().rev()
    }

    /// Orbits of the vector set: (lex-max representative, member
    /// count), in descending representative order.
    pub fn vector_orbits(&self, group: &PermutationGroup) -> Vec<(Vec<i64>, u64)> {
        let mut orbits: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
        for v in self.entries.keys() {
            let canon = group
                .elements()
                .iter()
                .map(|g| group.apply_vec(g, v))
                .max()
                .expect("nonempty group");
            *orbits.entry(canon).or_insert(0) += 1;
        }
        orbits.into_iter().rev().collect()
    }

    pub fn orbit_count(&self, group: &PermutationGroup) -> u64 {
        self.vector_orbits(group).len() as u64
    }

    /// Whether every group element permutes the key set.
    pub fn is_group_stable(&self, group: &PermutationGroup) -> bool {
        group.elements().iter().all(|g| {
            self.entries
                .keys()
                .all(|v| self.entries.contains_key(&group.apply_vec(g, v)))
        })
    }

    /// The coordinate sum shared by all vectors, if uniform.
    pub fn coordinate_sum(&self) -> Option<i64> {
        let mut sums = self.entries.keys().map(|v| v.iter().sum::<i64>());
        let first = sums.next()?;
        sums.all(|s| s == first).then_some(first)
    }

    /// Set union with counter addition; witnesses from `self` win.
    pub fn merge(mut self, other: ClassTable) -> ClassTable {
        for (v, e) in other.entries {
            match self.entries.entry(v) {
                Entry::Vacant(slot) => {
                    slot.insert(e);
                }
                Entry::Occupied(mut slot) => {
                    let mine = slot.get_mut();
                    mine.representatives += e.representatives;
                    mine.triangulations += e.triangulations;
                }
            }
        }
        self
    }

    /// vectors.txt body: one vector per line, descending.
    pub fn vectors_text(&self) -> String {
        let mut out = String::new();
        for (v, _) in self.entries_desc() {
            out.push_str(&io::format_vector(v));
            out.push('\n');
        }
        out
    }

    /// orbits.txt body: orbit representative and member count per
    /// line, descending.
    pub fn orbits_text(&self, group: &PermutationGroup) -> String {
        let mut out = String::new();
        for (rep, size) in self.vector_orbits(group) {
            out.push_str(&io::format_vector(&rep));
            out.push_str(&format!(" {size}\n"));
        }
        out
    }

    pub fn summary_line(&self, group: &PermutationGroup) -> String {
        format!(
            "classes={} orbits={} triangulations={}",
            self.classes(),
            self.orbit_count(group),
            self.triangulations()
        )
    }
}

/// Builds the class table from a stream of orbit representatives.
///
/// For a representative r, the stabilizer of r inside the group is
/// contained in the stabilizer of its vector, so the orbit of r
/// spreads evenly over the vector orbit and each vector receives
/// |Stab(eta)| / |Stab(r)| triangulations.
pub fn collect_classes(
    cfg: &PointConfiguration,
    group: &PermutationGroup,
    lat: &HullFaceLattice,
    mc: &ChainCountTable,
    cache: &ContributionCache,
    reps: impl IntoIterator<Item = Triangulation>,
) -> Result<ClassTable, MassiveError> {
    let mut table = ClassTable::default();
    for rep in reps {
        let eta = eta_cached(cfg, lat, mc, cache, &rep)?;
        let stab_tri = group.stabilizer_size(&rep);
        let stab_vec = group.stabilizer_size_vec(eta.entries());
        assert_eq!(
            stab_vec % stab_tri,
            0,
            "triangulation stabilizer must sit inside the vector stabilizer"
        );
        let per_vector = (stab_vec / stab_tri) as u64;
        let mut expanded: BTreeMap<Vec<i64>, &Vec<usize>> = BTreeMap::new();
        for g in group.elements() {
            expanded.entry(group.apply_vec(g, eta.entries())).or_insert(g);
        }
        assert_eq!(expanded.len() * stab_vec, group.order());
        for (v, g) in expanded {
            match table.entries.entry(v) {
                Entry::Vacant(slot) => {
                    slot.insert(ClassEntry {
                        representatives: 1,
                        witness: group.apply(g, &rep),
                        triangulations: per_vector,
                    });
                }
                Entry::Occupied(mut slot) => {
                    let e = slot.get_mut();
                    e.representatives += 1;
                    e.triangulations += per_vector;
                }
            }
        }
    }
    Ok(table)
}

/// Per-vector triangulation counts (not just representatives).
pub fn class_sizes(
    cfg: &PointConfiguration,
    group: &PermutationGroup,
    lat: &HullFaceLattice,
    mc: &ChainCountTable,
    cache: &ContributionCache,
    reps: impl IntoIterator<Item = Triangulation>,
) -> Result<BTreeMap<Vec<i64>, u64>, MassiveError> {
    Ok(collect_classes(cfg, group, lat, mc, cache, reps)?
        .entries
        .into_iter()
        .map(|(v, e)| (v, e.triangulations))
        .collect())
}

/// Exact vertex test for each vector against the convex hull of the
/// whole set; returns the vectors that fail (an empty report
/// certifies every vector as a vertex).
pub fn vertex_certify(vectors: &[Vec<i64>]) -> Vec<Vec<i64>> {
    vectors
        .iter()
        .enumerate()
        .filter(|(i, v)| !is_vertex(v, vectors, *i))
        .map(|(_, v)| v.clone())
        .collect()
}

/// v is a vertex exactly when it is not a convex combination of the
/// other vectors, i.e. when that feasibility program has no solution.
fn is_vertex(v: &[i64], vectors: &[Vec<i64>], skip: usize) -> bool {
    let others: Vec<&Vec<i64>> = vectors
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != skip)
        .map(|(_, u)| u)
        .collect();
    if others.is_empty() {
        return true;
    }
    let mut a: Vec<Vec<i64>> = (0..v.len())
        .map(|i| others.iter().map(|u| u[i]).collect())
        .collect();
    a.push(vec![1; others.len()]);
    let mut b = v.to_vec();
    b.push(1);
    match lp::solve(&a, &b, &vec![0; others.len()]) {
        LpOutcome::Infeasible => true,
        LpOutcome::Optimal { .. } => false,
        LpOutcome::Unbounded => unreachable!("constant objective"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::mc_count;
    use crate::enumerate::{self, Options, RegularityCache};

    struct Setup {
        cfg: PointConfiguration,
        group: PermutationGroup,
        lat: HullFaceLattice,
        mc: ChainCountTable,
        cache: ContributionCache,
        reps: Vec<Triangulation>,
    }

    fn setup(pts: Vec<Vec<i64>>, generators: Option<Vec<Vec<usize>>>) -> Setup {
        let cfg = PointConfiguration::normalize(pts).unwrap();
        let group = match generators {
            Some(gens) => PermutationGroup::from_generators(&cfg, gens).unwrap(),
            None => PermutationGroup::trivial(cfg.n()),
        };
        let lat = HullFaceLattice::build(&cfg).unwrap();
        let mc = mc_count(&lat).unwrap();
        let cache = ContributionCache::new();
        let reg = RegularityCache::new();
        let mut reps = Vec::new();
        enumerate::enumerate_regular(&cfg, &group, &reg, Options::default(), |t, _| {
            reps.push(t.clone())
        })
        .unwrap();
        Setup {
            cfg,
            group,
            lat,
            mc,
            cache,
            reps,
        }
    }

    fn table(s: &Setup) -> ClassTable {
        collect_classes(&s.cfg, &s.group, &s.lat, &s.mc, &s.cache, s.reps.clone()).unwrap()
    }

    fn two_delta_two() -> Setup {
        setup(
            vec![
                vec![0, 0],
                vec![0, 1],
                vec![0, 2],
                vec![1, 0],
                vec![1, 1],
                vec![2, 0],
            ],
            Some(vec![vec![0, 3, 5, 1, 4, 2], vec![2, 4, 5, 1, 3, 0]]),
        )
    }

    #[test]
    fn five_classes_in_three_orbits() {
        let s = two_delta_two();
        assert_eq!(s.reps.len(), 5);
        let t = table(&s);
        assert_eq!(t.classes(), 5);
        assert_eq!(t.orbit_count(&s.group), 3);
        assert_eq!(t.triangulations(), 14);
        assert_eq!(t.summary_line(&s.group), "classes=5 orbits=3 triangulations=14");
        for v in [
            vec![1, 0, 1, 0, 0, 1],
            vec![1, 0, 0, 0, 2, 0],
            vec![0, 0, 1, 2, 0, 0],
            vec![0, 2, 0, 0, 0, 1],
            vec![0, 1, 0, 1, 1, 0],
        ] {
            assert!(t.get(&v).is_some(), "missing {v:?}");
        }
        let mut sizes: Vec<u64> = t.entries_desc().map(|(_, e)| e.triangulations).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 1, 4, 4, 4]);
        assert!(t.is_group_stable(&s.group));
        assert_eq!(t.coordinate_sum(), Some(3));
        // Orbit sizes 1 + 3 + 1 cover the five vectors.
        let mut orbit_sizes: Vec<u64> =
            t.vector_orbits(&s.group).into_iter().map(|(_, k)| k).collect();
        orbit_sizes.sort_unstable();
        assert_eq!(orbit_sizes, vec![1, 1, 3]);
    }

    #[test]
    fn witnesses_carry_their_vector() {
        let s = two_delta_two();
        let t = table(&s);
        for (v, e) in t.entries_desc() {
            let eta = eta_cached(&s.cfg, &s.lat, &s.mc, &s.cache, &e.witness).unwrap();
            assert_eq!(eta.entries(), v.as_slice());
            assert!(e.representatives >= 1);
        }
    }

    #[test]
    fn segment_sizes_and_stabilizer_arithmetic() {
        // Trivial group: each of the two subdivisions is its own class.
        let plain = setup(vec![vec![0], vec![1], vec![2]], None);
        let t = table(&plain);
        assert_eq!(t.classes(), 2);
        let sizes: Vec<u64> = t.entries_desc().map(|(_, e)| e.triangulations).collect();
        assert_eq!(sizes, vec![1, 1]);
        assert_eq!(t.triangulations(), 2);
        // The reflection fixes both triangulations and both vectors,
        // so sizes are unchanged while the group is nontrivial.
        let cfg = PointConfiguration::normalize(vec![vec![0], vec![1], vec![2]]).unwrap();
        let group = PermutationGroup::from_generators(&cfg, vec![vec![2, 1, 0]]).unwrap();
        assert_eq!(group.order(), 2);
        let lat = HullFaceLattice::build(&cfg).unwrap();
        let mc = mc_count(&lat).unwrap();
        let cache = ContributionCache::new();
        let reg = RegularityCache::new();
        let mut reps = Vec::new();
        enumerate::enumerate_regular(&cfg, &group, &reg, Options::default(), |t, _| {
            reps.push(t.clone())
        })
        .unwrap();
        let t = collect_classes(&cfg, &group, &lat, &mc, &cache, reps).unwrap();
        assert_eq!(t.classes(), 2);
        assert_eq!(t.triangulations(), 2);
        assert!(t.get(&[1, 0, 1]).is_some());
        assert!(t.get(&[0, 2, 0]).is_some());
        assert_eq!(t.orbit_count(&group), 2);
    }

    #[test]
    fn partition_property_without_symmetry() {
        let moae = setup(
            vec![
                vec![4, 0],
                vec![0, 4],
                vec![0, 0],
                vec![2, 1],
                vec![1, 2],
                vec![1, 1],
            ],
            None,
        );
        let t = table(&moae);
        assert_eq!(t.triangulations(), moae.reps.len() as u64);
        assert!(t.classes() <= t.triangulations());
        assert!(t.coordinate_sum().is_some());
        let full = two_delta_two();
        let with_group = table(&full);
        let plain = setup(
            vec![
                vec![0, 0],
                vec![0, 1],
                vec![0, 2],
                vec![1, 0],
                vec![1, 1],
                vec![2, 0],
            ],
            None,
        );
        let without_group = table(&plain);
        assert_eq!(without_group.triangulations(), 14);
        // Same classes either way; only the grouping differs.
        let a: Vec<&Vec<i64>> = with_group.entries_desc().map(|(v, _)| v).collect();
        let b: Vec<&Vec<i64>> = without_group.entries_desc().map(|(v, _)| v).collect();
        assert_eq!(a, b);
        for (v, e) in without_group.entries_desc() {
            assert_eq!(e.triangulations, with_group.get(v).unwrap().triangulations);
        }
    }

    #[test]
    fn merge_matches_single_pass() {
        let s = two_delta_two();
        let whole = table(&s);
        let (left, right) = s.reps.split_at(2);
        let a = collect_classes(&s.cfg, &s.group, &s.lat, &s.mc, &s.cache, left.to_vec()).unwrap();
        let b = collect_classes(&s.cfg, &s.group, &s.lat, &s.mc, &s.cache, right.to_vec()).unwrap();
        let ab = a.clone().merge(b.clone());
        let ba = b.merge(a);
        assert_eq!(ab.classes(), whole.classes());
        assert_eq!(ab.triangulations(), whole.triangulations());
        assert_eq!(ba.triangulations(), whole.triangulations());
        for (v, e) in whole.entries_desc() {
            assert_eq!(ab.get(v).unwrap().triangulations, e.triangulations);
            assert_eq!(ab.get(v).unwrap().representatives, e.representatives);
        }
    }

    #[test]
    fn vertex_certification() {
        let s = two_delta_two();
        let t = table(&s);
        let vectors: Vec<Vec<i64>> = t.entries_desc().map(|(v, _)| v.clone()).collect();
        assert!(vertex_certify(&vectors).is_empty(), "pentagon vertices");
        assert!(vertex_certify(&[vec![1, 0, 1], vec![0, 2, 0]]).is_empty());
        // Doubling preserves vertexhood and makes midpoints integral;
        // an inserted midpoint is the only failure.
        let mut doubled: Vec<Vec<i64>> = vectors
            .iter()
            .map(|v| v.iter().map(|x| 2 * x).collect())
            .collect();
        let mid: Vec<i64> = doubled[0]
            .iter()
            .zip(&doubled[1])
            .map(|(a, b)| (a + b) / 2)
            .collect();
        assert!(mid.iter().zip(&doubled[0]).any(|(m, d)| m != d));
        doubled.push(mid.clone());
        assert_eq!(vertex_certify(&doubled), vec![mid]);
    }

    #[test]
    fn output_texts_are_descending() {
        let s = two_delta_two();
        let t = table(&s);
        let vectors = t.vectors_text();
        let lines: Vec<&str> = vectors.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "(1,0,1,0,0,1)");
        let parsed: Vec<Vec<i64>> = lines
            .iter()
            .map(|l| io::parse_vector(l).unwrap())
            .collect();
        assert!(parsed.windows(2).all(|w| w[0] > w[1]));
        let orbits = t.orbits_text(&s.group);
        let orbit_lines: Vec<&str> = orbits.lines().collect();
        assert_eq!(orbit_lines.len(), 3);
        for line in orbit_lines {
            let (v, size) = line.rsplit_once(' ').unwrap();
            io::parse_vector(v).unwrap();
            let size: u64 = size.parse().unwrap();
            assert!(size == 1 || size == 3);
        }
    }
}
