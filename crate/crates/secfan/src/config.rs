//! Point configurations, lattice volumes, and hull face data.
//!
//! A configuration is a finite list of distinct integer points.
//! Construction renormalizes the points by an affine lattice isomorphism
//! so that they affinely span `Z^d` with the first point at the origin;
//! every downstream volume is a lattice volume in those coordinates.
//! Hull faces are recorded as point index sets, which makes face
//! containment a subset test.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num::{BigInt, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::linalg::{self, big_row};

/// Bit set over point indices.
pub type Mask = u128;

/// Hard cap so that index sets fit in a `Mask`.
pub const MAX_POINTS: usize = 120;

pub(crate) fn mask_iter(mask: Mask) -> impl Iterator<Item = usize> {
    let mut m = mask;
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(i)
        }
    })
}

pub(crate) fn mask_of(indices: &[usize]) -> Mask {
    indices.iter().fold(0, |m, &i| m | (1 << i))
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("configuration needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("configuration exceeds the {MAX_POINTS} point cap with {0} points")]
    TooManyPoints(usize),
    #[error("point {index} has {got} coordinates, expected {want}")]
    MixedArity { index: usize, got: usize, want: usize },
    #[error("points {0} and {1} coincide")]
    DuplicatePoint(usize, usize),
    #[error("coordinates overflow the supported range")]
    CoordinateOverflow,
    #[error("point index {0} out of range for {1} points")]
    IndexOutOfRange(usize, usize),
    #[error("simplex vertex list must be nonempty and strictly increasing")]
    MalformedSimplex,
    #[error("simplex {0:?} is affinely dependent")]
    AffinelyDependent(Vec<usize>),
    #[error("simplex {0:?} does not span the configuration")]
    NotFullDimensional(Vec<usize>),
    #[error("chain count overflow")]
    CountOverflow,
}

/// A simplex given by strictly increasing point indices.
///
/// Affine independence is a property of the simplex within a
/// configuration and is checked where volumes are taken.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Simplex {
    verts: Vec<usize>,
    mask: Mask,
}

impl Simplex {
    pub fn new(verts: Vec<usize>) -> Result<Self, ConfigError> {
        if verts.is_empty() || verts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::MalformedSimplex);
        }
        if *verts.last().unwrap() >= MAX_POINTS {
            return Err(ConfigError::IndexOutOfRange(
                *verts.last().unwrap(),
                MAX_POINTS,
            ));
        }
        let mask = mask_of(&verts);
        Ok(Simplex { verts, mask })
    }

    pub(crate) fn from_mask(mask: Mask) -> Self {
        Simplex {
            verts: mask_iter(mask).collect(),
            mask,
        }
    }

    pub fn vertices(&self) -> &[usize] {
        &self.verts
    }

    pub fn mask(&self) -> Mask {
        self.mask
    }

    /// Dimension as a simplex: one less than the vertex count.
    pub fn dim(&self) -> usize {
        self.verts.len() - 1
    }

    pub fn contains(&self, point: usize) -> bool {
        point < MAX_POINTS && self.mask & (1 << point) != 0
    }
}

/// Affine representation of one point over the vertices of a spanning cell.
///
/// `coeffs[j]` is `vol(cell)` times the j-th barycentric coordinate of the
/// point, so the entries are integers summing to `vol(cell)`. The signs
/// partition the supporting circuit: `plus` holds the point itself plus the
/// vertices with negative coefficient, `minus` the vertices with positive
/// coefficient.
#[derive(Debug)]
pub struct CellPointRep {
    pub coeffs: Vec<i64>,
    pub vol: u64,
    pub plus: Vec<usize>,
    pub minus: Vec<usize>,
}

/// A normalized point configuration.
///
/// Immutable after construction; internal memo tables are synchronized,
/// so shared references may be used from several threads.
pub struct PointConfiguration {
    raw: Vec<Vec<i64>>,
    coords: Vec<Vec<i64>>,
    dim: usize,
    volumes: Mutex<HashMap<Mask, u64>>,
    reps: Mutex<HashMap<(Mask, u32), Arc<CellPointRep>>>,
    affine_basis: OnceLock<Vec<usize>>,
    pub(crate) hull_volume_memo: OnceLock<u64>,
}

impl std::fmt::Debug for PointConfiguration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PointConfiguration")
            .field("n", &self.coords.len())
            .field("dim", &self.dim)
            .finish()
    }
}

impl PointConfiguration {
    /// Builds a configuration from raw integer points.
    ///
    /// The points are translated so the first one is the origin and
    /// rewritten in a basis of the lattice generated by their differences.
    pub fn normalize(points: Vec<Vec<i64>>) -> Result<Self, ConfigError> {
        let n = points.len();
        if n < 2 {
            return Err(ConfigError::TooFewPoints(n));
        }
        if n > MAX_POINTS {
            return Err(ConfigError::TooManyPoints(n));
        }
        let arity = points[0].len();
        for (i, p) in points.iter().enumerate() {
            if p.len() != arity {
                return Err(ConfigError::MixedArity {
                    index: i,
                    got: p.len(),
                    want: arity,
                });
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if points[i] == points[j] {
                    return Err(ConfigError::DuplicatePoint(i, j));
                }
            }
        }
        let diffs: Vec<Vec<BigInt>> = points[1..]
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&points[0])
                    .map(|(&a, &b)| BigInt::from(a) - BigInt::from(b))
                    .collect()
            })
            .collect();
        let h = linalg::hnf(diffs.clone());
        let dim = h.rank();
        let mut coords = Vec::with_capacity(n);
        coords.push(vec![0i64; dim]);
        for d in &diffs {
            // Differences generate the row lattice, so this always solves.
            let x = linalg::solve_left(&h, d).expect("difference vector outside its own lattice");
            let row: Option<Vec<i64>> = x.iter().map(BigInt::to_i64).collect();
            coords.push(row.ok_or(ConfigError::CoordinateOverflow)?);
        }
        Ok(PointConfiguration {
            raw: points,
            coords,
            dim,
            volumes: Mutex::new(HashMap::new()),
            reps: Mutex::new(HashMap::new()),
            affine_basis: OnceLock::new(),
            hull_volume_memo: OnceLock::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    /// Dimension of the affine span.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Normalized coordinates of point `i` (length `dim`).
    pub fn coord(&self, i: usize) -> &[i64] {
        &self.coords[i]
    }

    /// The points as given before normalization.
    pub fn raw(&self) -> &[Vec<i64>] {
        &self.raw
    }

    pub fn full_mask(&self) -> Mask {
        if self.n() == MAX_POINTS as usize {
            Mask::MAX >> (128 - MAX_POINTS)
        } else {
            (1 << self.n()) - 1
        }
    }

    fn check_simplex(&self, s: &Simplex) -> Result<(), ConfigError> {
        if *s.vertices().last().unwrap() >= self.n() {
            return Err(ConfigError::IndexOutOfRange(
                *s.vertices().last().unwrap(),
                self.n(),
            ));
        }
        Ok(())
    }

    /// Normalized lattice volume of a simplex, measured in the lattice
    /// `Z^d` intersected with the affine span of the simplex. This is the
    /// gcd of the maximal minors of the edge difference matrix; a vertex
    /// has volume 1.
    pub fn lattice_volume(&self, s: &Simplex) -> Result<u64, ConfigError> {
        self.check_simplex(s)?;
        if s.dim() == 0 {
            return Ok(1);
        }
        if let Some(&v) = self.volumes.lock().unwrap().get(&s.mask()) {
            return Ok(v);
        }
        let v = self.volume_uncached(s)?;
        self.volumes.lock().unwrap().insert(s.mask(), v);
        Ok(v)
    }

    /// Volume computation without the memo table; the definitional path.
    pub(crate) fn volume_uncached(&self, s: &Simplex) -> Result<u64, ConfigError> {
        let verts = s.vertices();
        let k = s.dim();
        let base = &self.coords[verts[0]];
        let rows: Vec<Vec<BigInt>> = verts[1..]
            .iter()
            .map(|&v| {
                self.coords[v]
                    .iter()
                    .zip(base)
                    .map(|(&a, &b)| BigInt::from(a) - BigInt::from(b))
                    .collect()
            })
            .collect();
        let mut g = BigInt::zero();
        for cols in subsets_of_size(self.dim, k) {
            let minor: Vec<Vec<BigInt>> = rows
                .iter()
                .map(|r| cols.iter().map(|&c| r[c].clone()).collect())
                .collect();
            g = num::integer::gcd(g, linalg::det(minor));
            if g == BigInt::from(1) {
                break;
            }
        }
        if g.is_zero() {
            return Err(ConfigError::AffinelyDependent(verts.to_vec()));
        }
        g.abs().to_u64().ok_or(ConfigError::CoordinateOverflow)
    }

    /// Lexicographically first affinely independent spanning subset,
    /// `dim + 1` indices.
    pub fn affine_basis(&self) -> &[usize] {
        self.affine_basis.get_or_init(|| {
            let mut basis = vec![0usize];
            let mut rows: Vec<Vec<BigInt>> = Vec::new();
            for i in 1..self.n() {
                if basis.len() == self.dim + 1 {
                    break;
                }
                let mut cand = rows.clone();
                cand.push(
                    self.coords[i]
                        .iter()
                        .zip(&self.coords[0])
                        .map(|(&a, &b)| BigInt::from(a - b))
                        .collect(),
                );
                if linalg::rank(cand.clone()) == cand.len() {
                    rows = cand;
                    basis.push(i);
                }
            }
            debug_assert_eq!(basis.len(), self.dim + 1);
            basis
        })
    }

    /// Affine representation of `p` over a spanning cell, cached.
    pub fn affine_rep(
        &self,
        cell: &Simplex,
        p: usize,
    ) -> Result<Arc<CellPointRep>, ConfigError> {
        self.check_simplex(cell)?;
        if p >= self.n() {
            return Err(ConfigError::IndexOutOfRange(p, self.n()));
        }
        if cell.dim() != self.dim {
            return Err(ConfigError::NotFullDimensional(cell.vertices().to_vec()));
        }
        debug_assert!(!cell.contains(p));
        let key = (cell.mask(), p as u32);
        if let Some(r) = self.reps.lock().unwrap().get(&key) {
            return Ok(Arc::clone(r));
        }
        let rep = Arc::new(self.affine_rep_uncached(cell, p)?);
        self.reps.lock().unwrap().insert(key, Arc::clone(&rep));
        Ok(rep)
    }

    fn affine_rep_uncached(
        &self,
        cell: &Simplex,
        p: usize,
    ) -> Result<CellPointRep, ConfigError> {
        let verts = cell.vertices();
        let d = self.dim;
        let hom = |i: usize| -> Vec<BigInt> {
            let mut r = big_row(&self.coords[i]);
            r.push(BigInt::from(1));
            r
        };
        let m: Vec<Vec<BigInt>> = verts.iter().map(|&v| hom(v)).collect();
        let dd = linalg::det(m.clone());
        if dd.is_zero() {
            return Err(ConfigError::AffinelyDependent(verts.to_vec()));
        }
        let sign = if dd.is_negative() {
            BigInt::from(-1)
        } else {
            BigInt::from(1)
        };
        let vol = dd.abs().to_u64().ok_or(ConfigError::CoordinateOverflow)?;
        let mut coeffs = Vec::with_capacity(d + 1);
        for j in 0..=d {
            let mut mj = m.clone();
            mj[j] = hom(p);
            let c = linalg::det(mj) * &sign;
            coeffs.push(c.to_i64().ok_or(ConfigError::CoordinateOverflow)?);
        }
        debug_assert_eq!(coeffs.iter().sum::<i64>(), vol as i64);
        let mut plus = vec![p];
        let mut minus = Vec::new();
        for (j, &c) in coeffs.iter().enumerate() {
            if c < 0 {
                plus.push(verts[j]);
            } else if c > 0 {
                minus.push(verts[j]);
            }
        }
        plus.sort_unstable();
        Ok(CellPointRep {
            coeffs,
            vol,
            plus,
            minus,
        })
    }
}

fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Identifier of a face in a [`HullFaceLattice`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct FaceId(usize);

#[derive(Debug)]
pub struct HullFace {
    dim: usize,
    points: Vec<usize>,
    mask: Mask,
}

impl HullFace {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// All configuration points lying on the face, not just its vertices.
    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn mask(&self) -> Mask {
        self.mask
    }
}

/// The full face lattice of the hull of a configuration.
///
/// Faces are stored as point index sets ordered by (dimension, mask), so
/// containment is a subset test on masks. The top face carries every
/// point, including interior ones.
pub struct HullFaceLattice {
    faces: Vec<HullFace>,
    top: FaceId,
    parents: Vec<Vec<FaceId>>,
    dim: usize,
    containing_memo: Mutex<HashMap<Mask, FaceId>>,
}

impl std::fmt::Debug for HullFaceLattice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HullFaceLattice")
            .field("dim", &self.dim)
            .field("faces", &self.faces.len())
            .finish()
    }
}

impl HullFaceLattice {
    /// Computes every nonempty hull face of the configuration.
    pub fn build(cfg: &PointConfiguration) -> Result<Self, ConfigError> {
        let n = cfg.n();
        let d = cfg.dim();
        let mut facet_masks: Vec<Mask> = Vec::new();
        // A facet hyperplane is spanned by d affinely independent points;
        // scan all d-subsets and keep one-sided hyperplanes.
        for sub in subsets_of_size(n, d) {
            let base = cfg.coord(sub[0]);
            let rows: Vec<Vec<BigInt>> = sub[1..]
                .iter()
                .map(|&v| {
                    cfg.coord(v)
                        .iter()
                        .zip(base)
                        .map(|(&a, &b)| BigInt::from(a - b))
                        .collect()
                })
                .collect();
            let mut normal = Vec::with_capacity(d);
            for j in 0..d {
                let minor: Vec<Vec<BigInt>> = rows
                    .iter()
                    .map(|r| {
                        (0..d)
                            .filter(|&c| c != j)
                            .map(|c| r[c].clone())
                            .collect()
                    })
                    .collect();
                let mut m = linalg::det(minor);
                if j % 2 == 1 {
                    m = -m;
                }
                normal.push(m);
            }
            if normal.iter().all(Zero::is_zero) {
                continue;
            }
            let offset: BigInt = normal
                .iter()
                .zip(base)
                .map(|(nj, &b)| nj * BigInt::from(b))
                .sum();
            let mut mask: Mask = 0;
            let mut pos = false;
            let mut neg = false;
            for i in 0..n {
                let val: BigInt = normal
                    .iter()
                    .zip(cfg.coord(i))
                    .map(|(nj, &x)| nj * BigInt::from(x))
                    .sum();
                match val.cmp(&offset) {
                    std::cmp::Ordering::Less => neg = true,
                    std::cmp::Ordering::Greater => pos = true,
                    std::cmp::Ordering::Equal => mask |= 1 << i,
                }
                if pos && neg {
                    break;
                }
            }
            if !(pos && neg) && !facet_masks.contains(&mask) {
                facet_masks.push(mask);
            }
        }
        // Close under intersection; every face is an intersection of facets.
        let mut masks: Vec<Mask> = facet_masks.clone();
        let mut frontier = facet_masks;
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &f in &frontier {
                for i in 0..masks.len() {
                    let x = f & masks[i];
                    if x != 0 && !masks.contains(&x) && !next.contains(&x) {
                        next.push(x);
                    }
                }
            }
            masks.extend(next.iter().copied());
            frontier = next;
        }
        masks.push(cfg.full_mask());
        let mut faces: Vec<HullFace> = masks
            .into_iter()
            .map(|mask| {
                let points: Vec<usize> = mask_iter(mask).collect();
                let base = cfg.coord(points[0]);
                let rows: Vec<Vec<BigInt>> = points[1..]
                    .iter()
                    .map(|&v| {
                        cfg.coord(v)
                            .iter()
                            .zip(base)
                            .map(|(&a, &b)| BigInt::from(a - b))
                            .collect()
                    })
                    .collect();
                let dim = linalg::rank(rows);
                HullFace { dim, points, mask }
            })
            .collect();
        faces.sort_by_key(|f| (f.dim, f.mask));
        faces.dedup_by_key(|f| f.mask);
        let top = FaceId(faces.len() - 1);
        debug_assert_eq!(faces[top.0].dim, d);
        let parents: Vec<Vec<FaceId>> = faces
            .iter()
            .map(|f| {
                faces
                    .iter()
                    .enumerate()
                    .filter(|(_, g)| g.dim == f.dim + 1 && g.mask & f.mask == f.mask)
                    .map(|(i, _)| FaceId(i))
                    .collect()
            })
            .collect();
        Ok(HullFaceLattice {
            faces,
            top,
            parents,
            dim: d,
            containing_memo: Mutex::new(HashMap::new()),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn top(&self) -> FaceId {
        self.top
    }

    pub fn face(&self, id: FaceId) -> &HullFace {
        &self.faces[id.0]
    }

    pub fn faces(&self) -> impl Iterator<Item = (FaceId, &HullFace)> {
        self.faces.iter().enumerate().map(|(i, f)| (FaceId(i), f))
    }

    /// Faces of dimension `dim(f) + 1` containing `f`.
    pub fn parents(&self, id: FaceId) -> &[FaceId] {
        &self.parents[id.0]
    }

    /// Number of faces per dimension, `0..=dim`.
    pub fn f_vector(&self) -> Vec<usize> {
        let mut f = vec![0usize; self.dim + 1];
        for face in &self.faces {
            f[face.dim] += 1;
        }
        f
    }

    /// The unique inclusion-minimal hull face containing all the given
    /// points. Returns the top face for interior point sets.
    pub fn smallest_containing_face(&self, mask: Mask) -> FaceId {
        debug_assert_ne!(mask, 0);
        if let Some(&id) = self.containing_memo.lock().unwrap().get(&mask) {
            return id;
        }
        // Faces are closed under intersection, so the minimum is unique
        // and is found at the lowest dimension; faces are dim-sorted.
        let id = self
            .faces
            .iter()
            .position(|f| f.mask & mask == mask)
            .map(FaceId)
            .unwrap_or(self.top);
        self.containing_memo.lock().unwrap().insert(mask, id);
        id
    }

    /// Whether the simplex lies in a hull face of its own dimension.
    /// Full-dimensional simplices are always massive.
    pub fn is_massive(&self, s: &Simplex) -> bool {
        self.is_massive_mask(s.mask(), s.dim())
    }

    pub(crate) fn is_massive_mask(&self, mask: Mask, dim: usize) -> bool {
        self.face(self.smallest_containing_face(mask)).dim() == dim
    }
}

/// Massive chain counts from each hull face up to the hull itself.
#[derive(Debug)]
pub struct ChainCountTable {
    counts: Vec<u64>,
}

impl ChainCountTable {
    pub fn count(&self, id: FaceId) -> u64 {
        self.counts[id.0]
    }

    /// Chains in the hull starting at the smallest face containing `mask`.
    pub fn count_above(&self, lat: &HullFaceLattice, mask: Mask) -> u64 {
        self.count(lat.smallest_containing_face(mask))
    }
}

/// Counts maximal chains `F = F_j < F_{j+1} < ... < F_d = Q` in the hull
/// face lattice with one face per dimension. The count for a face depends
/// only on the face, which is what makes per-simplex caching sound.
pub fn mc_count(lat: &HullFaceLattice) -> Result<ChainCountTable, ConfigError> {
    let nf = lat.faces.len();
    let mut counts = vec![0u64; nf];
    counts[lat.top.0] = 1;
    // Faces are sorted by dimension; sweep from the top down.
    for i in (0..nf).rev() {
        if i == lat.top.0 {
            continue;
        }
        let mut total: u64 = 0;
        for &p in lat.parents(FaceId(i)) {
            total = total
                .checked_add(counts[p.0])
                .ok_or(ConfigError::CountOverflow)?;
        }
        counts[i] = total;
    }
    Ok(ChainCountTable { counts })
}
