//! Permutation groups acting on point indices, orbit machinery, and
//! canonical representatives by lex-maximal GKZ vector.
//!
//! A group element is a permutation g of point indices that comes from
//! an affine lattice symmetry of the configuration: the map sending
//! point i to point g[i] extends to an affine isomorphism. Construction
//! checks this, so every stored element preserves simplex volumes.

use std::collections::{BTreeSet, HashMap, VecDeque};

use num::BigInt;
use thiserror::Error;

use crate::config::PointConfiguration;
use crate::linalg;
use crate::triang::{gkz_vector, GkzVector, Triangulation};

#[derive(Debug, Error)]
pub enum SymmetryError {
    #[error("permutation {0:?} is not a bijection of 0..{1}")]
    NotAPermutation(Vec<usize>, usize),
    #[error("permutation {0:?} is not an affine symmetry of the configuration")]
    NotASymmetry(Vec<usize>),
    #[error("coordinate permutation {0:?} does not preserve the point set")]
    NotPointPreserving(Vec<usize>),
    #[error("full symmetry search is capped at {0} points")]
    TooLargeForSearch(usize),
}

/// A finite permutation group on point indices, fully expanded.
#[derive(Debug)]
pub struct PermutationGroup {
    n: usize,
    elements: Vec<Vec<usize>>,
}

fn compose(f: &[usize], g: &[usize]) -> Vec<usize> {
    // (f then g): i -> g[f[i]]
    f.iter().map(|&i| g[i]).collect()
}

fn is_permutation(p: &[usize], n: usize) -> bool {
    if p.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &i in p {
        if i >= n || seen[i] {
            return false;
        }
        seen[i] = true;
    }
    true
}

/// Whether the index permutation extends to an affine map of the
/// normalized coordinates: writing each point over an affine basis,
/// the image points must satisfy the same affine relations.
fn is_affine_symmetry(cfg: &PointConfiguration, g: &[usize]) -> bool {
    let basis = cfg.affine_basis();
    let b0 = basis[0];
    for i in 0..cfg.n() {
        let lam = match affine_coords(cfg, &basis[1..], b0, i) {
            Some(l) => l,
            None => return false,
        };
        // Image must satisfy g(i) = g(b0) + sum lambda_k (g(b_k) - g(b0)).
        let gb0 = g[b0];
        let mut target: Vec<num::BigRational> = cfg
            .coord(g[i])
            .iter()
            .zip(cfg.coord(gb0))
            .map(|(&a, &b)| num::BigRational::from_integer(BigInt::from(a - b)))
            .collect();
        for (k, &b) in basis[1..].iter().enumerate() {
            let img = diff(cfg, g[b], gb0);
            for (t, e) in target.iter_mut().zip(&img) {
                *t -= &lam[k] * num::BigRational::from_integer(e.clone());
            }
        }
        if !target.iter().all(num::Zero::is_zero) {
            return false;
        }
    }
    true
}

fn diff(cfg: &PointConfiguration, a: usize, b: usize) -> Vec<BigInt> {
    cfg.coord(a)
        .iter()
        .zip(cfg.coord(b))
        .map(|(&x, &y)| BigInt::from(x - y))
        .collect()
}

/// Rational coordinates of p over the affinely independent diffs
/// (b_k - b0); None when p is outside their span (never happens for a
/// spanning basis).
fn affine_coords(
    cfg: &PointConfiguration,
    basis_tail: &[usize],
    b0: usize,
    p: usize,
) -> Option<Vec<num::BigRational>> {
    // Solve lam * D = p - b0 where D's rows are the basis diffs. The
    // rows are independent, so solve by HNF of D with the transform
    // tracked via augmentation: append an identity block and read the
    // lambda back. Sizes are tiny.
    let d = cfg.dim();
    let k = basis_tail.len();
    let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(k);
    for (j, &b) in basis_tail.iter().enumerate() {
        let mut r = diff(cfg, b, b0);
        let mut tag = vec![BigInt::from(0); k];
        tag[j] = BigInt::from(1);
        r.extend(tag);
        rows.push(r);
    }
    let h = linalg::hnf(rows);
    let mut target = diff(cfg, p, b0);
    target.extend(vec![BigInt::from(0); k]);
    // Solve on the first d columns only; the tag columns then hold
    // minus the coefficients over the original rows.
    let mut res: Vec<num::BigRational> = target
        .iter()
        .map(|t| num::BigRational::from_integer(t.clone()))
        .collect();
    for (row, &pc) in h.rows.iter().zip(&h.pivot_cols) {
        if pc >= d {
            break;
        }
        let q = &res[pc] / num::BigRational::from_integer(row[pc].clone());
        if !num::Zero::is_zero(&q) {
            for (r, y) in res.iter_mut().zip(row) {
                *r -= &q * num::BigRational::from_integer(y.clone());
            }
        }
    }
    if res[..d].iter().all(num::Zero::is_zero) {
        Some(res[d..].iter().map(|v| -v.clone()).collect())
    } else {
        None
    }
}

impl PermutationGroup {
    /// The trivial group on n indices.
    pub fn trivial(n: usize) -> Self {
        PermutationGroup {
            n,
            elements: vec![(0..n).collect()],
        }
    }

    /// Expands the group generated by the given index permutations,
    /// verifying each generator is an affine symmetry.
    pub fn from_generators(
        cfg: &PointConfiguration,
        generators: Vec<Vec<usize>>,
    ) -> Result<Self, SymmetryError> {
        let n = cfg.n();
        for g in &generators {
            if !is_permutation(g, n) {
                return Err(SymmetryError::NotAPermutation(g.clone(), n));
            }
            if !is_affine_symmetry(cfg, g) {
                return Err(SymmetryError::NotASymmetry(g.clone()));
            }
        }
        let id: Vec<usize> = (0..n).collect();
        let mut elements = vec![id.clone()];
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::from([id]);
        let mut queue: VecDeque<usize> = VecDeque::from([0]);
        while let Some(i) = queue.pop_front() {
            let cur = elements[i].clone();
            for g in &generators {
                let next = compose(&cur, g);
                if seen.insert(next.clone()) {
                    elements.push(next);
                    queue.push_back(elements.len() - 1);
                }
            }
        }
        elements.sort();
        Ok(PermutationGroup { n, elements })
    }

    /// The permutations induced by coordinate permutations of the raw
    /// points (point p goes to the point whose raw coordinates are p's
    /// permuted ones).
    pub fn induced_group(
        cfg: &PointConfiguration,
        coordinate_perms: Vec<Vec<usize>>,
    ) -> Result<Self, SymmetryError> {
        let arity = cfg.raw()[0].len();
        let index: HashMap<&[i64], usize> = cfg
            .raw()
            .iter()
            .enumerate()
            .map(|(i, p)| (p.as_slice(), i))
            .collect();
        let mut gens = Vec::with_capacity(coordinate_perms.len());
        for cp in &coordinate_perms {
            if !is_permutation(cp, arity) {
                return Err(SymmetryError::NotAPermutation(cp.clone(), arity));
            }
            let mut g = Vec::with_capacity(cfg.n());
            for p in cfg.raw() {
                let moved: Vec<i64> = cp.iter().map(|&k| p[k]).collect();
                match index.get(moved.as_slice()) {
                    Some(&j) => g.push(j),
                    None => return Err(SymmetryError::NotPointPreserving(cp.clone())),
                }
            }
            gens.push(g);
        }
        Self::from_generators(cfg, gens)
    }

    /// Brute-force full affine symmetry group; configurations only up
    /// to 12 points. Searches images of an affine basis and extends.
    pub fn full_symmetry_group(cfg: &PointConfiguration) -> Result<Self, SymmetryError> {
        if cfg.n() > 12 {
            return Err(SymmetryError::TooLargeForSearch(12));
        }
        let n = cfg.n();
        let basis = cfg.affine_basis().to_vec();
        let mut gens: Vec<Vec<usize>> = Vec::new();
        let mut images = vec![0usize; basis.len()];
        search_images(cfg, &basis, &mut images, 0, &mut |g| {
            gens.push(g.to_vec());
        });
        let _ = n;
        Self::from_generators(cfg, gens)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Vec<usize>] {
        &self.elements
    }

    pub fn is_trivial(&self) -> bool {
        self.elements.len() == 1
    }

    /// Relabels a triangulation by g.
    pub fn apply(&self, g: &[usize], t: &Triangulation) -> Triangulation {
        let cells = t
            .cells()
            .iter()
            .map(|c| {
                let mut verts: Vec<usize> = c.vertices().iter().map(|&v| g[v]).collect();
                verts.sort_unstable();
                crate::config::Simplex::new(verts).expect("relabeled cell malformed")
            })
            .collect();
        Triangulation::from_cells_unchecked(cells)
    }

    /// Permutes vector entries: entry i of the input lands at g[i].
    pub fn apply_vec<T: Clone + Default>(&self, g: &[usize], v: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); v.len()];
        for (i, x) in v.iter().enumerate() {
            out[g[i]] = x.clone();
        }
        out
    }

    /// The orbit of a triangulation, deduplicated and sorted.
    pub fn orbit(&self, t: &Triangulation) -> Vec<Triangulation> {
        let mut orb: Vec<Triangulation> =
            self.elements.iter().map(|g| self.apply(g, t)).collect();
        orb.sort();
        orb.dedup();
        orb
    }

    /// Number of group elements fixing the triangulation.
    pub fn stabilizer_size(&self, t: &Triangulation) -> usize {
        self.elements.iter().filter(|g| &self.apply(g, t) == t).count()
    }

    /// Number of group elements fixing the vector under entry
    /// permutation.
    pub fn stabilizer_size_vec(&self, v: &[i64]) -> usize {
        self.elements
            .iter()
            .filter(|g| self.apply_vec(g, v) == v)
            .count()
    }

    /// The orbit member with the lexicographically largest GKZ vector;
    /// ties (possible only for non-regular inputs) broken by the
    /// lexicographically smallest cell list. Returns the representative
    /// and its GKZ vector.
    pub fn canonical_representative(
        &self,
        cfg: &PointConfiguration,
        t: &Triangulation,
    ) -> (Triangulation, GkzVector) {
        let phi = gkz_vector(cfg, t);
        if self.is_trivial() {
            return (t.clone(), phi);
        }
        let mut best_vec: Option<Vec<i64>> = None;
        let mut arg: Vec<&Vec<usize>> = Vec::new();
        for g in &self.elements {
            let w = self.apply_vec(g, &phi.0);
            match &best_vec {
                Some(b) if *b > w => {}
                Some(b) if *b == w => arg.push(g),
                _ => {
                    best_vec = Some(w);
                    arg = vec![g];
                }
            }
        }
        let best_vec = best_vec.unwrap();
        let rep = arg
            .into_iter()
            .map(|g| self.apply(g, t))
            .min()
            .expect("nonempty group");
        (rep, GkzVector(best_vec))
    }
}

/// Recursive search for basis images inducing affine symmetries.
fn search_images(
    cfg: &PointConfiguration,
    basis: &[usize],
    images: &mut Vec<usize>,
    k: usize,
    emit: &mut impl FnMut(&[usize]),
) {
    if k == basis.len() {
        if let Some(g) = extend_symmetry(cfg, basis, images) {
            emit(&g);
        }
        return;
    }
    for cand in 0..cfg.n() {
        if images[..k].contains(&cand) {
            continue;
        }
        images[k] = cand;
        search_images(cfg, basis, images, k + 1, emit);
    }
}

/// Tries to extend basis images to a full point permutation via the
/// induced affine map; None when some point leaves the set or the map
/// is not injective on it.
fn extend_symmetry(
    cfg: &PointConfiguration,
    basis: &[usize],
    images: &[usize],
) -> Option<Vec<usize>> {
    let coord_index: HashMap<&[i64], usize> = (0..cfg.n())
        .map(|i| (cfg.coord(i), i))
        .collect();
    let b0 = basis[0];
    let mut g = vec![usize::MAX; cfg.n()];
    for i in 0..cfg.n() {
        let lam = affine_coords(cfg, &basis[1..], b0, i)?;
        // image(i) = images[0] + sum lam_k (images[k+1] - images[0])
        let mut img: Vec<num::BigRational> = cfg
            .coord(images[0])
            .iter()
            .map(|&x| num::BigRational::from_integer(BigInt::from(x)))
            .collect();
        for (k, l) in lam.iter().enumerate() {
            let dv = diff(cfg, images[k + 1], images[0]);
            for (t, e) in img.iter_mut().zip(&dv) {
                *t += l * num::BigRational::from_integer(e.clone());
            }
        }
        let as_ints: Option<Vec<i64>> = img
            .iter()
            .map(|r| {
                if num::One::is_one(r.denom()) {
                    num::ToPrimitive::to_i64(r.numer())
                } else {
                    None
                }
            })
            .collect();
        let j = *coord_index.get(as_ints?.as_slice())?;
        if g.contains(&j) {
            return None;
        }
        g[i] = j;
    }
    Some(g)
}
