//! Massive GKZ vectors.
//!
//! A face of a triangulation is massive when it has the same dimension
//! as the smallest hull face containing it, so it "fills up" part of
//! the boundary geometry it lives in (full-dimensional cells are
//! always massive). The massive vector of a triangulation T is
//!
//! ```text
//! eta_T = sum_{j=0}^{d} (-1)^{d-j} eta_{T,j}
//! ```
//!
//! where eta_{T,j}(i) adds vol(s) for every massive j-face s of T
//! containing point i.
//!
//! Two engines compute it. The direct one expands all faces of T. The
//! cached one assembles eta_T as a sum of per-cell contribution
//! vectors that depend only on the cell, not on the triangulation, by
//! weighting each massive face with counts of massive chains; these
//! vectors are cached across triangulations, which is where the bulk
//! evaluation speed comes from.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use num::{BigInt, BigRational, ToPrimitive, Zero};
use thiserror::Error;

use crate::config::{
    ChainCountTable, ConfigError, Mask, PointConfiguration, Simplex,
};
use crate::config::HullFaceLattice;
use crate::io::{self, IoError};
use crate::triang::Triangulation;

#[derive(Debug, Error)]
pub enum MassiveError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{face:?} is not a face of {cell:?}")]
    NotAFace { face: Vec<usize>, cell: Vec<usize> },
    #[error("massive vector entry {entry} is not an integer: {value}")]
    NonIntegral { entry: usize, value: String },
}

/// Integer massive vector, one entry per point.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct MassiveGkzVector(pub Vec<i64>);

impl MassiveGkzVector {
    pub fn entries(&self) -> &[i64] {
        &self.0
    }
}

impl std::fmt::Display for MassiveGkzVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&io::format_vector(&self.0))
    }
}

/// Every face of every cell, deduplicated, grouped by dimension
/// 0..=d.
pub fn all_faces(cfg: &PointConfiguration, t: &Triangulation) -> Vec<Vec<Simplex>> {
    let d = cfg.dim();
    let mut by_dim: Vec<std::collections::BTreeSet<Mask>> = vec![Default::default(); d + 1];
    for cell in t.cells() {
        let verts = cell.vertices();
        for pick in 1u32..(1 << verts.len()) {
            let mut mask: Mask = 0;
            for (b, &v) in verts.iter().enumerate() {
                if pick & (1 << b) != 0 {
                    mask |= 1 << v;
                }
            }
            by_dim[pick.count_ones() as usize - 1].insert(mask);
        }
    }
    by_dim
        .into_iter()
        .map(|set| set.into_iter().map(Simplex::from_mask).collect())
        .collect()
}

/// The alternating-sum definition, expanded over all faces of T.
pub fn eta_direct(
    cfg: &PointConfiguration,
    lat: &HullFaceLattice,
    t: &Triangulation,
) -> Result<MassiveGkzVector, MassiveError> {
    let d = cfg.dim();
    let mut acc = vec![0i64; cfg.n()];
    for (j, faces) in all_faces(cfg, t).iter().enumerate() {
        let sign = if (d - j) % 2 == 0 { 1 } else { -1 };
        for f in faces {
            if !lat.is_massive(f) {
                continue;
            }
            let vol = cfg.lattice_volume(f)? as i64;
            for &v in f.vertices() {
                acc[v] += sign * vol;
            }
        }
    }
    Ok(MassiveGkzVector(acc))
}

/// Number of massive chains from `face` up to `cell` through the face
/// poset of `cell`, all members massive and consecutive in dimension.
pub fn chains_within(
    cfg: &PointConfiguration,
    lat: &HullFaceLattice,
    face: &Simplex,
    cell: &Simplex,
) -> Result<u64, MassiveError> {
    if face.mask() & cell.mask() != face.mask() {
        return Err(MassiveError::NotAFace {
            face: face.vertices().to_vec(),
            cell: cell.vertices().to_vec(),
        });
    }
    if cell.dim() != cfg.dim() {
        return Err(MassiveError::Config(ConfigError::NotFullDimensional(
            cell.vertices().to_vec(),
        )));
    }
    let verts = cell.vertices();
    let k = verts.len();
    // Top-down over local vertex subsets: counts[S] = massive chains
    // from S to the whole cell. Cells are massive, so the top count is
    // one; smaller faces add up over their massive covers.
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    counts.insert((1 << k) - 1, 1);
    for size in (face.vertices().len()..k).rev() {
        for pick in subsets_with_popcount(k as u32, size as u32) {
            let mask = local_to_global(verts, pick);
            if !lat.is_massive(&Simplex::from_mask(mask)) {
                continue;
            }
            let mut total = 0u64;
            for b in 0..k as u32 {
                if pick & (1 << b) == 0 {
                    if let Some(c) = counts.get(&(pick | (1 << b))) {
                        total += c;
                    }
                }
            }
            if total > 0 {
                counts.insert(pick, total);
            }
        }
    }
    let pick = verts
        .iter()
        .enumerate()
        .fold(0u32, |m, (b, &v)| if face.contains(v) { m | (1 << b) } else { m });
    Ok(counts.get(&pick).copied().unwrap_or(0))
}

fn local_to_global(verts: &[usize], pick: u32) -> Mask {
    let mut mask: Mask = 0;
    for (b, &v) in verts.iter().enumerate() {
        if pick & (1 << b) != 0 {
            mask |= 1 << v;
        }
    }
    mask
}

fn subsets_with_popcount(k: u32, size: u32) -> impl Iterator<Item = u32> {
    (0u32..(1 << k)).filter(move |p| p.count_ones() == size)
}

/// The triangulation-independent contribution of one cell:
/// Σ_j (−1)^{d−j} over massive j-faces s of the cell, weighting each
/// vertex of s by chains_within(s, cell) · vol(s) / (massive chains
/// from s through the hull).
pub fn simplex_contribution(
    cfg: &PointConfiguration,
    lat: &HullFaceLattice,
    mc: &ChainCountTable,
    cell: &Simplex,
) -> Result<Vec<BigRational>, MassiveError> {
    let d = cfg.dim();
    let verts = cell.vertices();
    let k = verts.len();
    let mut out = vec![BigRational::zero(); cfg.n()];
    for pick in 1u32..(1 << k) {
        let j = pick.count_ones() as usize - 1;
        let face = Simplex::from_mask(local_to_global(verts, pick));
        if !lat.is_massive(&face) {
            continue;
        }
        let within = chains_within(cfg, lat, &face, cell)?;
        if within == 0 {
            continue;
        }
        let through_hull = mc.count_above(lat, face.mask());
        // Massive faces always extend to the hull's top face.
        assert!(through_hull > 0);
        let vol = cfg.lattice_volume(&face)?;
        let mut w = BigRational::new(
            BigInt::from(within) * BigInt::from(vol),
            BigInt::from(through_hull),
        );
        if (d - j) % 2 == 1 {
            w = -w;
        }
        for &v in face.vertices() {
            out[v] += &w;
        }
    }
    Ok(out)
}

/// Scaled sparse form of a contribution vector: entry i holds
/// terms[i].1 / den at point terms[i].0. Only built when everything
/// fits in i64; bulk evaluation sums these with integer arithmetic.
#[derive(Debug)]
struct FastForm {
    den: i64,
    terms: Vec<(u32, i64)>,
}

fn fast_form(dense: &[BigRational]) -> Option<FastForm> {
    let mut den: i64 = 1;
    for v in dense {
        let d = v.denom().to_i64()?;
        den = den.checked_mul(d / num::integer::gcd(den, d))?;
    }
    let mut terms = Vec::new();
    for (i, v) in dense.iter().enumerate() {
        if v.is_zero() {
            continue;
        }
        let scaled = v.numer().to_i64()?.checked_mul(den / v.denom().to_i64()?)?;
        terms.push((i as u32, scaled));
    }
    Some(FastForm { den, terms })
}

#[derive(Debug)]
struct CacheEntry {
    dense: Arc<Vec<BigRational>>,
    fast: Option<FastForm>,
}

impl CacheEntry {
    fn new(dense: Vec<BigRational>) -> Self {
        let fast = fast_form(&dense);
        CacheEntry {
            dense: Arc::new(dense),
            fast,
        }
    }
}

/// Cache of per-cell contribution vectors, keyed by the cell's vertex
/// set. Thread-safe; concurrent duplicate computation is harmless
/// because the value is a pure function of the key.
#[derive(Debug, Default)]
pub struct ContributionCache {
    store: Mutex<BTreeMap<Mask, CacheEntry>>,
}

impl ContributionCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.store.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contribution(
        &self,
        cfg: &PointConfiguration,
        lat: &HullFaceLattice,
        mc: &ChainCountTable,
        cell: &Simplex,
    ) -> Result<Arc<Vec<BigRational>>, MassiveError> {
        if let Some(e) = self.store.lock().unwrap().get(&cell.mask()) {
            return Ok(Arc::clone(&e.dense));
        }
        let e = CacheEntry::new(simplex_contribution(cfg, lat, mc, cell)?);
        let dense = Arc::clone(&e.dense);
        self.store.lock().unwrap().insert(cell.mask(), e);
        Ok(dense)
    }

    /// Fills the cache for the cells of the given triangulations up
    /// front instead of on first use; evaluation afterwards is pure
    /// lookup.
    pub fn prepopulate(
        &self,
        cfg: &PointConfiguration,
        lat: &HullFaceLattice,
        mc: &ChainCountTable,
        ts: &[Triangulation],
    ) -> Result<(), MassiveError> {
        for t in ts {
            for cell in t.cells() {
                self.contribution(cfg, lat, mc, cell)?;
            }
        }
        Ok(())
    }

    /// Serializes as `# config <digest>` plus one `{tuple}: (vector)`
    /// line per entry, sorted by tuple.
    pub fn serialize(&self, cfg: &PointConfiguration) -> String {
        let mut out = format!("# config {}\n", io::config_digest(cfg));
        for (mask, e) in self.store.lock().unwrap().iter() {
            let s = Simplex::from_mask(*mask);
            let verts: Vec<String> = s.vertices().iter().map(usize::to_string).collect();
            out.push_str(&format!(
                "{{{}}}: {}\n",
                verts.join(","),
                io::format_rational_vector(&e.dense)
            ));
        }
        out
    }

    /// Parses a serialized cache, insisting the stored digest matches
    /// the configuration the cache will be used with.
    pub fn parse(text: &str, cfg: &PointConfiguration) -> Result<Self, IoError> {
        let expect = io::config_digest(cfg);
        let header = text.lines().next().unwrap_or("");
        let digest = header.strip_prefix("# config ").ok_or_else(|| IoError::Parse {
            line: 1,
            msg: "cache must start with `# config <digest>`".into(),
        })?;
        if digest.trim() != expect {
            return Err(IoError::Parse {
                line: 1,
                msg: "cache was built for a different configuration".into(),
            });
        }
        let mut store = BTreeMap::new();
        for (ln, line) in io::content_lines(text) {
            let (tuple, vector) = line.split_once(": ").ok_or_else(|| IoError::Parse {
                line: ln,
                msg: "expected `{tuple}: (vector)`".into(),
            })?;
            let verts = io::parse_index_tuple_at(tuple, ln)?;
            let cell = Simplex::new(verts).map_err(|e| IoError::Parse {
                line: ln,
                msg: e.to_string(),
            })?;
            let vec = io::parse_rational_vector_at(vector, ln)?;
            if vec.len() != cfg.n() {
                return Err(IoError::Parse {
                    line: ln,
                    msg: format!("vector length {} differs from {}", vec.len(), cfg.n()),
                });
            }
            store.insert(cell.mask(), CacheEntry::new(vec));
        }
        Ok(ContributionCache {
            store: Mutex::new(store),
        })
    }

    pub fn save(&self, path: &str, cfg: &PointConfiguration) -> Result<(), IoError> {
        std::fs::write(path, self.serialize(cfg)).map_err(|source| IoError::File {
            path: path.to_string(),
            source,
        })
    }

    pub fn load(path: &str, cfg: &PointConfiguration) -> Result<Self, IoError> {
        Self::parse(&io::read_file(path)?, cfg)
    }
}

/// Integer accumulation over the scaled sparse forms. None on any
/// missing fast form, overflow, or non-integral total; the caller then
/// redoes the sum exactly.
fn eta_fast(
    store: &BTreeMap<Mask, CacheEntry>,
    n: usize,
    t: &Triangulation,
) -> Option<Vec<i64>> {
    let mut acc = vec![0i128; n];
    let mut den: i64 = 1;
    for cell in t.cells() {
        let f = store.get(&cell.mask())?.fast.as_ref()?;
        if f.den != den {
            let new = den.checked_mul(f.den / num::integer::gcd(den, f.den))?;
            let scale = (new / den) as i128;
            if scale != 1 {
                for a in acc.iter_mut() {
                    *a = a.checked_mul(scale)?;
                }
            }
            den = new;
        }
        let factor = (den / f.den) as i128;
        for &(i, v) in &f.terms {
            acc[i as usize] = acc[i as usize].checked_add((v as i128).checked_mul(factor)?)?;
        }
    }
    let mut out = Vec::with_capacity(n);
    for v in acc {
        if v % den as i128 != 0 {
            return None;
        }
        out.push(i64::try_from(v / den as i128).ok()?);
    }
    Some(out)
}

/// Sums cached per-cell contributions; the result must be integral or
/// the engine itself is broken.
pub fn eta_cached(
    cfg: &PointConfiguration,
    lat: &HullFaceLattice,
    mc: &ChainCountTable,
    cache: &ContributionCache,
    t: &Triangulation,
) -> Result<MassiveGkzVector, MassiveError> {
    let missing: Vec<&Simplex> = {
        let store = cache.store.lock().unwrap();
        t.cells()
            .iter()
            .filter(|c| !store.contains_key(&c.mask()))
            .collect()
    };
    for cell in missing {
        cache.contribution(cfg, lat, mc, cell)?;
    }
    let store = cache.store.lock().unwrap();
    if let Some(out) = eta_fast(&store, cfg.n(), t) {
        return Ok(MassiveGkzVector(out));
    }
    let mut acc = vec![BigRational::zero(); cfg.n()];
    for cell in t.cells() {
        let e = &store[&cell.mask()];
        for (a, v) in acc.iter_mut().zip(e.dense.iter()) {
            *a += v;
        }
    }
    let mut out = Vec::with_capacity(cfg.n());
    for (i, v) in acc.iter().enumerate() {
        if !v.is_integer() {
            return Err(MassiveError::NonIntegral {
                entry: i,
                value: v.to_string(),
            });
        }
        out.push(v.numer().to_i64().ok_or_else(|| MassiveError::NonIntegral {
            entry: i,
            value: v.to_string(),
        })?);
    }
    Ok(MassiveGkzVector(out))
}
