//! Triangulations: validation, GKZ vectors, the placing construction,
//! and bistellar flips.
//!
//! A `Triangulation` value is always valid for its configuration: the
//! only public constructor is [`Triangulation::validate`]. Flip results
//! and relabeled copies are built internally without re-validation
//! (their validity is a theorem, re-checked in debug builds).

use std::collections::HashMap;
use std::fmt;

use num::{BigInt, BigRational, One, Signed};
use thiserror::Error;

use crate::config::{
    mask_iter, ConfigError, HullFaceLattice, Mask, PointConfiguration, Simplex,
};

#[derive(Debug, Error)]
pub enum TriangError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("no cells")]
    Empty,
    #[error("cell {0:?} repeated")]
    DuplicateCell(Vec<usize>),
    #[error("cell {cell:?} has dimension {got}, configuration has dimension {want}")]
    WrongDimension {
        cell: Vec<usize>,
        got: usize,
        want: usize,
    },
    #[error("cell volumes sum to {got}, hull volume is {want}")]
    VolumeMismatch { got: u64, want: u64 },
    #[error("facet {0:?} shared by {1} cells")]
    FacetCount(Vec<usize>, usize),
    #[error("boundary facet {0:?} shared by two cells")]
    BoundaryOverlap(Vec<usize>),
    #[error("interior facet {0:?} not shared")]
    InteriorGap(Vec<usize>),
}

/// A triangulation: a set of full-dimensional cells covering the hull.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Triangulation {
    cells: Vec<Simplex>,
    used: Mask,
}

/// The GKZ vector of a triangulation.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct GkzVector(pub Vec<i64>);

impl GkzVector {
    pub fn entries(&self) -> &[i64] {
        &self.0
    }

    /// A triangulation is full iff its GKZ vector has no zero entry.
    pub fn is_zero_free(&self) -> bool {
        self.0.iter().all(|&e| e != 0)
    }
}

impl fmt::Display for GkzVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::io::format_vector(&self.0))
    }
}

/// One bistellar flip: the supporting circuit and the neighbor it yields.
#[derive(Debug)]
pub struct Flip {
    pub plus: Vec<usize>,
    pub minus: Vec<usize>,
    pub result: Triangulation,
}

/// Lattice volume of the hull, memoized on the configuration.
///
/// Computed by summing the cells of the placing triangulation; pinned
/// against known values in tests.
pub fn hull_volume(cfg: &PointConfiguration) -> u64 {
    *cfg.hull_volume_memo.get_or_init(|| {
        placing_triangulation(cfg)
            .cells()
            .iter()
            .map(|c| cfg.lattice_volume(c).expect("placing cell degenerate"))
            .sum()
    })
}

impl Triangulation {
    /// Validates a cell list and builds the triangulation.
    ///
    /// Accepts iff every cell is full-dimensional and non-degenerate,
    /// cells are distinct, volumes sum to the hull volume, and every
    /// codimension-one face of a cell is shared by exactly two cells
    /// (interior) or lies on the hull boundary and belongs to exactly
    /// one. Together these certify covering and proper intersection.
    pub fn validate(
        cfg: &PointConfiguration,
        lat: &HullFaceLattice,
        cells: Vec<Vec<usize>>,
    ) -> Result<Self, TriangError> {
        if cells.is_empty() {
            return Err(TriangError::Empty);
        }
        let d = cfg.dim();
        let mut simps = Vec::with_capacity(cells.len());
        let mut total: u64 = 0;
        for mut verts in cells {
            verts.sort_unstable();
            verts.dedup();
            let s = Simplex::new(verts)?;
            if s.dim() != d {
                return Err(TriangError::WrongDimension {
                    cell: s.vertices().to_vec(),
                    got: s.dim(),
                    want: d,
                });
            }
            total += cfg.lattice_volume(&s)?;
            simps.push(s);
        }
        simps.sort();
        if let Some(w) = simps.windows(2).find(|w| w[0] == w[1]) {
            return Err(TriangError::DuplicateCell(w[0].vertices().to_vec()));
        }
        let want = hull_volume(cfg);
        if total != want {
            return Err(TriangError::VolumeMismatch { got: total, want });
        }
        let mut facet_count: HashMap<Mask, usize> = HashMap::new();
        for s in &simps {
            for v in s.vertices() {
                *facet_count.entry(s.mask() & !(1 << v)).or_insert(0) += 1;
            }
        }
        for (&mask, &count) in &facet_count {
            let verts = || mask_iter(mask).collect::<Vec<_>>();
            let boundary = lat.is_massive_mask(mask, d - 1);
            match (count, boundary) {
                (1, true) | (2, false) => {}
                (1, false) => return Err(TriangError::InteriorGap(verts())),
                (2, true) => return Err(TriangError::BoundaryOverlap(verts())),
                (k, _) => return Err(TriangError::FacetCount(verts(), k)),
            }
        }
        Ok(Self::from_sorted(simps))
    }

    fn from_sorted(cells: Vec<Simplex>) -> Self {
        let used = cells.iter().fold(0, |m, c| m | c.mask());
        Triangulation { cells, used }
    }

    /// Builds from cells known to be a valid triangulation.
    pub(crate) fn from_cells_unchecked(mut cells: Vec<Simplex>) -> Self {
        cells.sort();
        Self::from_sorted(cells)
    }

    pub fn cells(&self) -> &[Simplex] {
        &self.cells
    }

    pub fn used_points(&self) -> Mask {
        self.used
    }

    /// Uses every point of the configuration.
    pub fn is_full(&self, cfg: &PointConfiguration) -> bool {
        self.used == cfg.full_mask()
    }

    /// Cell masks in sorted cell order; the compact identity of the
    /// triangulation.
    pub fn cell_masks(&self) -> Vec<Mask> {
        self.cells.iter().map(Simplex::mask).collect()
    }

    /// Rebuilds a triangulation from `cell_masks` output.
    pub(crate) fn from_masks_unchecked(masks: &[Mask]) -> Self {
        Self::from_cells_unchecked(masks.iter().map(|&m| Simplex::from_mask(m)).collect())
    }
}

impl fmt::Display for Triangulation {
    /// The batch record format: `{{0,2,4},{0,4,5}}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, c) in self.cells.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{{")?;
            for (j, v) in c.vertices().iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{v}")?;
            }
            write!(f, "}}")?;
        }
        write!(f, "}}")
    }
}

/// The GKZ vector: entry i is the total volume of cells containing i.
pub fn gkz_vector(cfg: &PointConfiguration, t: &Triangulation) -> GkzVector {
    let mut entries = vec![0i64; cfg.n()];
    for c in t.cells() {
        let vol = cfg.lattice_volume(c).expect("valid cell") as i64;
        for &v in c.vertices() {
            entries[v] += vol;
        }
    }
    GkzVector(entries)
}

/// The placing triangulation for the configuration's point order.
///
/// Points are inserted in index order; a point outside the current hull
/// is coned over the strictly visible part of the boundary, a point
/// that extends the affine span is coned over everything, and a point
/// inside the current hull is skipped. Placing triangulations are
/// regular.
pub fn placing_triangulation(cfg: &PointConfiguration) -> Triangulation {
    // The complex always triangulates the hull of the processed points
    // and lives in their affine span, whose dimension grows from 0 to
    // dim. Points are located relative to the span via exact rational
    // coordinates over the basis accumulated at dimension jumps.
    let mut cells: Vec<Vec<usize>> = vec![vec![0]];
    let mut span = SpanCoords::new(cfg);
    for p in 1..cfg.n() {
        if span.insert(p) {
            for c in &mut cells {
                c.push(p);
            }
            continue;
        }
        // Boundary facets of the current complex: in exactly one cell.
        let mut facet_owner: HashMap<Vec<usize>, (usize, bool)> = HashMap::new();
        for (ci, c) in cells.iter().enumerate() {
            for drop in 0..c.len() {
                let mut f = c.clone();
                f.remove(drop);
                facet_owner
                    .entry(f)
                    .and_modify(|e| e.1 = true)
                    .or_insert((ci, false));
            }
        }
        let mut new_cells: Vec<Vec<usize>> = Vec::new();
        for (f, (owner, shared)) in &facet_owner {
            if *shared || !span.strictly_visible(f, &cells[*owner], p) {
                continue;
            }
            let mut c = f.clone();
            c.push(p);
            c.sort_unstable();
            new_cells.push(c);
        }
        cells.extend(new_cells);
    }
    // hull_volume trusts this construction, so fail loudly on any
    // cell that did not reach full dimension.
    assert!(
        cells.iter().all(|c| c.len() == cfg.dim() + 1),
        "placing produced a non-spanning cell"
    );
    let simps = cells
        .into_iter()
        .map(|c| Simplex::new(c).expect("placing produced a malformed cell"))
        .collect();
    Triangulation::from_cells_unchecked(simps)
}

/// Rational coordinates on the affine span of the processed points.
struct SpanCoords<'a> {
    cfg: &'a PointConfiguration,
    basis: crate::linalg::Hnf,
    jumps: Vec<Vec<BigInt>>,
    coords: HashMap<usize, Vec<BigRational>>,
}

impl<'a> SpanCoords<'a> {
    fn new(cfg: &'a PointConfiguration) -> Self {
        SpanCoords {
            cfg,
            basis: crate::linalg::hnf(Vec::new()),
            jumps: Vec::new(),
            coords: HashMap::from([(0, Vec::new())]),
        }
    }

    fn diff(&self, p: usize) -> Vec<BigInt> {
        self.cfg
            .coord(p)
            .iter()
            .zip(self.cfg.coord(0))
            .map(|(&a, &b)| BigInt::from(a - b))
            .collect()
    }

    /// Registers point p. Returns true when p extends the span (a
    /// dimension jump), false when p lies in it; in the latter case its
    /// span coordinates are memoized.
    fn insert(&mut self, p: usize) -> bool {
        let d = self.diff(p);
        match crate::linalg::solve_left_rational(&self.basis, &d) {
            Some(x) => {
                self.coords.insert(p, x);
                false
            }
            None => {
                self.jumps.push(d.clone());
                self.basis = crate::linalg::hnf(self.jumps.clone());
                // Earlier in-span points keep valid coordinates only in
                // the old basis; recompute everything in the new one.
                let known: Vec<usize> = self.coords.keys().copied().collect();
                for q in known {
                    let dq = self.diff(q);
                    let x = crate::linalg::solve_left_rational(&self.basis, &dq)
                        .expect("old span point left the new span");
                    self.coords.insert(q, x);
                }
                self.coords.insert(
                    p,
                    crate::linalg::solve_left_rational(&self.basis, &d)
                        .expect("jump point not in its own span"),
                );
                true
            }
        }
    }

    fn hom(&self, i: usize) -> Vec<BigRational> {
        let mut r = self.coords[&i].clone();
        r.push(BigRational::one());
        r
    }

    /// Whether p is strictly on the outer side of the facet's
    /// hyperplane within the span; `cell` is the unique complex cell on
    /// the facet and fixes the inner side.
    fn strictly_visible(&self, facet: &[usize], cell: &[usize], p: usize) -> bool {
        let apex = cell.iter().find(|v| !facet.contains(v)).unwrap();
        let mut m: Vec<Vec<BigRational>> = facet.iter().map(|&v| self.hom(v)).collect();
        m.push(self.hom(*apex));
        let inner = crate::linalg::det_rat(m.clone());
        *m.last_mut().unwrap() = self.hom(p);
        let outer = crate::linalg::det_rat(m);
        // The sign pair is invariant under the basis choice; strictly
        // opposite signs put p and the complex on opposite sides.
        (inner * outer).is_negative()
    }
}

/// All bistellar flips of a triangulation.
///
/// Every flip of T is supported on the circuit of some pair (cell of T,
/// point outside it); candidates are scanned from all such pairs,
/// deduplicated by circuit, and kept when every almost-full face of the
/// circuit's T-side is present in T with one common link.
pub fn flips(cfg: &PointConfiguration, t: &Triangulation) -> Result<Vec<Flip>, ConfigError> {
    let mut seen: Vec<(Mask, Mask)> = Vec::new();
    let mut out = Vec::new();
    let full = cfg.full_mask();
    for cell in t.cells() {
        let mut outside = full & !cell.mask();
        while outside != 0 {
            let p = outside.trailing_zeros() as usize;
            outside &= outside - 1;
            let rep = cfg.affine_rep(cell, p)?;
            let key = (crate::config::mask_of(&rep.plus), crate::config::mask_of(&rep.minus));
            if seen.contains(&key) {
                continue;
            }
            seen.push(key);
            if let Some(flip) = try_circuit(t, &rep.plus, &rep.minus) {
                out.push(flip);
            }
        }
    }
    // Deterministic order for reproducible searches.
    out.sort_by(|a, b| (&a.plus, &a.minus).cmp(&(&b.plus, &b.minus)));
    Ok(out)
}

/// Attempts the flip supported on the oriented circuit (plus, minus);
/// plus is the side currently triangulated in T.
fn try_circuit(t: &Triangulation, plus: &[usize], minus: &[usize]) -> Option<Flip> {
    let support = crate::config::mask_of(plus) | crate::config::mask_of(minus);
    // The link of S \ {z} must exist and be one common set for all z.
    let mut link: Option<Vec<Mask>> = None;
    for &z in plus {
        let face = support & !(1 << z);
        let mut l: Vec<Mask> = t
            .cells()
            .iter()
            .filter(|c| c.mask() & face == face)
            .map(|c| c.mask() & !face)
            .collect();
        if l.is_empty() {
            return None;
        }
        l.sort_unstable();
        match &link {
            None => link = Some(l),
            Some(prev) if *prev == l => {}
            Some(_) => return None,
        }
    }
    let link = link?;
    let mut masks: Vec<Mask> = t
        .cells()
        .iter()
        .map(Simplex::mask)
        .filter(|m| {
            // Cells being removed: (S \ {z}) ∪ R for z in plus, R in link.
            !(m & support != 0
                && plus.iter().any(|&z| {
                    let face = support & !(1 << z);
                    m & face == face && link.contains(&(m & !face))
                }))
        })
        .collect();
    for &y in minus {
        let face = support & !(1 << y);
        for &r in &link {
            masks.push(face | r);
        }
    }
    masks.sort_unstable();
    masks.dedup();
    Some(Flip {
        plus: plus.to_vec(),
        minus: minus.to_vec(),
        result: Triangulation::from_masks_unchecked(&masks),
    })
}
