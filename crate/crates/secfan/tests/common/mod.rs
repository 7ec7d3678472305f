//! Shared infrastructure for the integration suites: an independent
//! brute-force triangulation enumerator, exact convex-position tests,
//! a lower-hull subdivision builder, the configuration sweep, and CLI
//! plumbing. Everything geometric here works on the raw input
//! coordinates with its own arithmetic so the suites can disagree
//! with the library when the library is wrong.

#![allow(dead_code)]

use std::path::Path;
use std::process::Command;

use num::{BigRational, FromPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use secfan::config::{HullFaceLattice, PointConfiguration};
use secfan::enumerate::{enumerate_regular, Options, RegularityCache};
use secfan::symmetry::PermutationGroup;
use secfan::triang::{GkzVector, Triangulation};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_secfan")
}

pub fn data(name: &str) -> String {
    format!("{}/tests/data/{}", env!("CARGO_MANIFEST_DIR"), name)
}

pub struct CliRun {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn cli(dir: &Path, args: &[&str]) -> CliRun {
    let out = Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("failed to spawn the binary");
    CliRun {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).expect("stdout is text"),
        stderr: String::from_utf8(out.stderr).expect("stderr is text"),
    }
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

// ---------------------------------------------------------------
// Library conveniences.

pub fn ctx(points: &[Vec<i64>]) -> (PointConfiguration, HullFaceLattice) {
    let cfg = PointConfiguration::normalize(points.to_vec()).unwrap();
    let lat = HullFaceLattice::build(&cfg).unwrap();
    (cfg, lat)
}

pub fn tri(cfg: &PointConfiguration, lat: &HullFaceLattice, cells: &[&[usize]]) -> Triangulation {
    Triangulation::validate(cfg, lat, cells.iter().map(|c| c.to_vec()).collect()).unwrap()
}

pub fn cells_of(t: &Triangulation) -> Vec<Vec<usize>> {
    let mut cells: Vec<Vec<usize>> = t.cells().iter().map(|c| c.vertices().to_vec()).collect();
    cells.sort();
    cells
}

/// Exhausts the orbit enumeration with default options and returns
/// the emitted representatives in emission order.
pub fn enumerate_all(
    cfg: &PointConfiguration,
    group: &PermutationGroup,
) -> Vec<(Triangulation, GkzVector)> {
    let cache = RegularityCache::new();
    let mut out = Vec::new();
    let run = enumerate_regular(cfg, group, &cache, Options::default(), |t, phi| {
        out.push((t.clone(), phi.clone()))
    })
    .unwrap();
    assert!(run.complete);
    out
}

pub fn d2_points() -> Vec<Vec<i64>> {
    vec![
        vec![0, 0],
        vec![0, 1],
        vec![0, 2],
        vec![1, 0],
        vec![1, 1],
        vec![2, 0],
    ]
}

pub fn d2_s3_generators() -> Vec<Vec<usize>> {
    vec![vec![0, 3, 5, 1, 4, 2], vec![2, 4, 5, 1, 3, 0]]
}

/// The six-point configuration whose two spiral triangulations are
/// not regular.
pub fn moae_points() -> Vec<Vec<i64>> {
    vec![
        vec![4, 0],
        vec![0, 4],
        vec![0, 0],
        vec![2, 1],
        vec![1, 2],
        vec![1, 1],
    ]
}

// ---------------------------------------------------------------
// Independent exact geometry on the raw coordinates.

fn det3(m: &[[i128; 3]; 3]) -> i128 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// |det| of the edge matrix in the ambient integer coordinates.
/// Nonzero exactly for full-dimensional simplices. Note this measures
/// volume in the ambient lattice, which can be a constant multiple of
/// the library's difference-lattice normalization across the whole
/// configuration.
pub fn ambient_volume(points: &[Vec<i64>], verts: &[usize]) -> i64 {
    let d = points[0].len();
    assert_eq!(verts.len(), d + 1);
    let a = &points[verts[0]];
    let edge = |v: usize, k: usize| (points[v][k] - a[k]) as i128;
    let det: i128 = match d {
        1 => edge(verts[1], 0),
        2 => edge(verts[1], 0) * edge(verts[2], 1) - edge(verts[1], 1) * edge(verts[2], 0),
        3 => {
            let mut m = [[0i128; 3]; 3];
            for (r, &v) in verts[1..].iter().enumerate() {
                for k in 0..3 {
                    m[r][k] = edge(v, k);
                }
            }
            det3(&m)
        }
        other => panic!("ambient volume not implemented for d = {other}"),
    };
    i64::try_from(det.abs()).unwrap()
}

/// Affine rank of the configuration over the rationals.
pub fn affine_rank(points: &[Vec<i64>]) -> usize {
    let cols = points[0].len();
    let mut rows: Vec<Vec<BigRational>> = points[1..]
        .iter()
        .map(|p| {
            (0..cols)
                .map(|k| BigRational::from_i64(p[k] - points[0][k]).unwrap())
                .collect()
        })
        .collect();
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        for r in 0..rows.len() {
            if r != rank && !rows[r][col].is_zero() {
                let f = &rows[r][col] / &rows[rank][col];
                for k in col..cols {
                    let sub = &rows[rank][k] * &f;
                    rows[r][k] -= sub;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// GKZ vector in the ambient lattice normalization: each point
/// accumulates the volumes of the cells containing it.
pub fn ambient_phi(points: &[Vec<i64>], cells: &[Vec<usize>]) -> Vec<i64> {
    let mut phi = vec![0i64; points.len()];
    for cell in cells {
        let vol = ambient_volume(points, cell);
        for &v in cell {
            phi[v] += vol;
        }
    }
    phi
}

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i128 {
    (a.0 - o.0) as i128 * (b.1 - o.1) as i128 - (a.1 - o.1) as i128 * (b.0 - o.0) as i128
}

/// Convex hull by the monotone chain, counterclockwise, no interior
/// or collinear boundary points.
fn hull_2d(points: &[Vec<i64>]) -> Vec<(i64, i64)> {
    let mut pts: Vec<(i64, i64)> = points.iter().map(|p| (p[0], p[1])).collect();
    pts.sort_unstable();
    pts.dedup();
    let build = |iter: &mut dyn Iterator<Item = (i64, i64)>| {
        let mut chain: Vec<(i64, i64)> = Vec::new();
        for p in iter {
            while chain.len() >= 2 && cross(chain[chain.len() - 2], chain[chain.len() - 1], p) <= 0
            {
                chain.pop();
            }
            chain.push(p);
        }
        chain
    };
    let lower = build(&mut pts.iter().copied());
    let upper = build(&mut pts.iter().rev().copied());
    let mut hull = lower;
    hull.pop();
    hull.extend(upper);
    hull.pop();
    hull
}

/// Normalized hull volume in the ambient lattice: the coordinate
/// range for d = 1, twice the shoelace area for d = 2.
pub fn ambient_hull_volume(points: &[Vec<i64>]) -> i64 {
    match points[0].len() {
        1 => {
            let xs: Vec<i64> = points.iter().map(|p| p[0]).collect();
            xs.iter().max().unwrap() - xs.iter().min().unwrap()
        }
        2 => {
            let h = hull_2d(points);
            let mut twice = 0i128;
            for i in 0..h.len() {
                let (x0, y0) = h[i];
                let (x1, y1) = h[(i + 1) % h.len()];
                twice += x0 as i128 * y1 as i128 - x1 as i128 * y0 as i128;
            }
            i64::try_from(twice.abs()).unwrap()
        }
        other => panic!("oracle hull volume not implemented for d = {other}"),
    }
}

type RPt = (BigRational, BigRational);

fn rpt(p: &[i64]) -> RPt {
    (
        BigRational::from_i64(p[0]).unwrap(),
        BigRational::from_i64(p[1]).unwrap(),
    )
}

fn cross_r(o: &RPt, a: &RPt, b: &RPt) -> BigRational {
    (&a.0 - &o.0) * (&b.1 - &o.1) - (&a.1 - &o.1) * (&b.0 - &o.0)
}

/// Sutherland and Hodgman clipping of a convex polygon by a
/// counterclockwise triangle, exact arithmetic throughout.
fn clip_by_triangle(mut poly: Vec<RPt>, tri: &[RPt; 3]) -> Vec<RPt> {
    for i in 0..3 {
        let p = tri[i].clone();
        let q = tri[(i + 1) % 3].clone();
        let mut out: Vec<RPt> = Vec::new();
        for k in 0..poly.len() {
            let s = &poly[k];
            let e = &poly[(k + 1) % poly.len()];
            let side_s = cross_r(&p, &q, s);
            let side_e = cross_r(&p, &q, e);
            if (side_s >= BigRational::zero()) != (side_e >= BigRational::zero()) {
                let t = &side_s / (&side_s - &side_e);
                out.push((&s.0 + &t * (&e.0 - &s.0), &s.1 + &t * (&e.1 - &s.1)));
            }
            if side_e >= BigRational::zero() {
                out.push(e.clone());
            }
        }
        poly = out;
        if poly.is_empty() {
            break;
        }
    }
    poly
}

fn ccw_triangle(points: &[Vec<i64>], verts: &[usize]) -> [RPt; 3] {
    let mut v = [verts[0], verts[1], verts[2]];
    let o = (points[v[0]][0], points[v[0]][1]);
    let a = (points[v[1]][0], points[v[1]][1]);
    let b = (points[v[2]][0], points[v[2]][1]);
    if cross(o, a, b) < 0 {
        v.swap(1, 2);
    }
    [rpt(&points[v[0]]), rpt(&points[v[1]]), rpt(&points[v[2]])]
}

fn proper_pair_2d(points: &[Vec<i64>], a: &[usize], b: &[usize]) -> bool {
    let ta = ccw_triangle(points, a);
    let tb = ccw_triangle(points, b);
    let clipped = clip_by_triangle(ta.to_vec(), &tb);
    let mut vs: Vec<RPt> = Vec::new();
    for v in clipped {
        if !vs.contains(&v) {
            vs.push(v);
        }
    }
    let shared: Vec<usize> = a.iter().copied().filter(|i| b.contains(i)).collect();
    match vs.len() {
        0 => shared.is_empty(),
        1 => shared.len() == 1 && vs[0] == rpt(&points[shared[0]]),
        _ => {
            // A positive-area intersection is never a common face of
            // two distinct triangles; otherwise the clipped region is
            // a segment whose endpoints must be the shared vertices.
            if vs[2..]
                .iter()
                .any(|v| !cross_r(&vs[0], &vs[1], v).is_zero())
            {
                return false;
            }
            if shared.len() != 2 {
                return false;
            }
            vs.sort();
            let mut ends = [rpt(&points[shared[0]]), rpt(&points[shared[1]])];
            ends.sort();
            vs[0] == ends[0] && *vs.last().unwrap() == ends[1]
        }
    }
}

fn proper_pair_1d(points: &[Vec<i64>], a: &[usize], b: &[usize]) -> bool {
    let span = |c: &[usize]| {
        let (x, y) = (points[c[0]][0], points[c[1]][0]);
        (x.min(y), x.max(y))
    };
    let (alo, ahi) = span(a);
    let (blo, bhi) = span(b);
    let lo = alo.max(blo);
    let hi = ahi.min(bhi);
    let shared: Vec<usize> = a.iter().copied().filter(|i| b.contains(i)).collect();
    match shared.len() {
        0 => lo > hi,
        1 => lo == hi && lo == points[shared[0]][0],
        _ => a == b,
    }
}

/// Whether two distinct full-dimensional cells intersect exactly in
/// the simplex spanned by their shared vertices.
pub fn proper_pair(points: &[Vec<i64>], a: &[usize], b: &[usize]) -> bool {
    match points[0].len() {
        1 => proper_pair_1d(points, a, b),
        2 => proper_pair_2d(points, a, b),
        other => panic!("oracle pair test not implemented for d = {other}"),
    }
}

fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == k {
            out.push((0..n).filter(|i| mask & (1 << i) != 0).collect());
        }
    }
    out
}

/// Every triangulation of the configuration, regular or not, as lex
/// sorted cell lists. Depth-first over lex ordered candidate cells
/// with pairwise-compatibility and volume pruning; a family is a
/// triangulation exactly when it is pairwise proper and its volumes
/// sum to the hull volume.
pub fn all_triangulations(points: &[Vec<i64>]) -> Vec<Vec<Vec<usize>>> {
    let d = points[0].len();
    let target = ambient_hull_volume(points);
    assert!(target > 0, "configuration must be full-dimensional");
    let cands: Vec<Vec<usize>> = k_subsets(points.len(), d + 1)
        .into_iter()
        .filter(|c| ambient_volume(points, c) > 0)
        .collect();
    let vols: Vec<i64> = cands.iter().map(|c| ambient_volume(points, c)).collect();
    let mut compat = vec![vec![false; cands.len()]; cands.len()];
    for i in 0..cands.len() {
        for j in i + 1..cands.len() {
            compat[i][j] = proper_pair(points, &cands[i], &cands[j]);
        }
    }
    let mut out = Vec::new();
    let mut chosen: Vec<usize> = Vec::new();
    fn dfs(
        start: usize,
        volume: i64,
        target: i64,
        cands: &[Vec<usize>],
        vols: &[i64],
        compat: &[Vec<bool>],
        chosen: &mut Vec<usize>,
        out: &mut Vec<Vec<Vec<usize>>>,
    ) {
        if volume == target {
            let mut cells: Vec<Vec<usize>> = chosen.iter().map(|&k| cands[k].clone()).collect();
            cells.sort();
            out.push(cells);
            return;
        }
        for k in start..cands.len() {
            if volume + vols[k] > target {
                continue;
            }
            if chosen.iter().all(|&c| compat[c][k]) {
                chosen.push(k);
                dfs(k + 1, volume + vols[k], target, cands, vols, compat, chosen, out);
                chosen.pop();
            }
        }
    }
    dfs(0, 0, target, &cands, &vols, &compat, &mut chosen, &mut out);
    out
}

// ---------------------------------------------------------------
// Exact feasibility: is a vector a convex combination of others?

/// Phase-one simplex with Bland's rule deciding Ax = b, x >= 0.
fn feasible(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> bool {
    let m = a.len();
    let k = a[0].len();
    for i in 0..m {
        if b[i] < BigRational::zero() {
            for v in a[i].iter_mut() {
                *v = -v.clone();
            }
            b[i] = -b[i].clone();
        }
    }
    // Tableau [A | I | b]; the objective row carries the reduced costs
    // of the artificial sum.
    let width = k + m + 1;
    let mut t: Vec<Vec<BigRational>> = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = vec![BigRational::zero(); width];
        row[..k].clone_from_slice(&a[i]);
        row[k + i] = BigRational::from_i64(1).unwrap();
        row[width - 1] = b[i].clone();
        t.push(row);
    }
    let mut obj = vec![BigRational::zero(); width];
    for row in &t {
        for (o, v) in obj.iter_mut().zip(row.iter()) {
            *o += v;
        }
    }
    for j in k..k + m {
        obj[j] -= BigRational::from_i64(1).unwrap();
    }
    let mut basis: Vec<usize> = (k..k + m).collect();
    loop {
        let Some(enter) = (0..k + m).find(|&j| obj[j] > BigRational::zero()) else {
            break;
        };
        let mut leave: Option<usize> = None;
        for i in 0..m {
            if t[i][enter] > BigRational::zero() {
                let better = match leave {
                    None => true,
                    Some(l) => {
                        let cur = &t[l][width - 1] / &t[l][enter];
                        let new = &t[i][width - 1] / &t[i][enter];
                        new < cur || (new == cur && basis[i] < basis[l])
                    }
                };
                if better {
                    leave = Some(i);
                }
            }
        }
        let r = leave.expect("phase-one objective is bounded below by zero");
        let piv = t[r][enter].clone();
        for v in t[r].iter_mut() {
            *v /= &piv;
        }
        for i in 0..m {
            if i != r && !t[i][enter].is_zero() {
                let f = t[i][enter].clone();
                for j in 0..width {
                    let sub = &t[r][j] * &f;
                    t[i][j] -= sub;
                }
            }
        }
        if !obj[enter].is_zero() {
            let f = obj[enter].clone();
            for j in 0..width {
                let sub = &t[r][j] * &f;
                obj[j] -= sub;
            }
        }
        basis[r] = enter;
    }
    obj[width - 1].is_zero()
}

/// Membership of `v` in the convex hull of `others`.
pub fn in_convex_hull(v: &[i64], others: &[Vec<i64>]) -> bool {
    if others.is_empty() {
        return false;
    }
    let m = v.len() + 1;
    let mut a = vec![Vec::with_capacity(others.len()); m];
    for u in others {
        for (r, &x) in u.iter().enumerate() {
            a[r].push(BigRational::from_i64(x).unwrap());
        }
        a[m - 1].push(BigRational::from_i64(1).unwrap());
    }
    let mut b: Vec<BigRational> = v.iter().map(|&x| BigRational::from_i64(x).unwrap()).collect();
    b.push(BigRational::from_i64(1).unwrap());
    feasible(a, b)
}

/// One flag per input vector: true when it is a vertex of the convex
/// hull of the whole family. A vector repeated in the family is never
/// a vertex under this convention, matching the geometry of secondary
/// polytopes where distinct triangulations sharing a coordinate
/// vector are both non-regular.
pub fn vertex_flags(vectors: &[Vec<i64>]) -> Vec<bool> {
    let mut distinct: Vec<Vec<i64>> = Vec::new();
    for v in vectors {
        if !distinct.contains(v) {
            distinct.push(v.clone());
        }
    }
    vectors
        .iter()
        .map(|v| {
            if vectors.iter().filter(|u| *u == v).count() > 1 {
                return false;
            }
            let others: Vec<Vec<i64>> =
                distinct.iter().filter(|u| *u != v).cloned().collect();
            !in_convex_hull(v, &others)
        })
        .collect()
}

// ---------------------------------------------------------------
// Lower-hull subdivisions from height functions.

/// Solves the square rational system rows * x = rhs, None if singular.
pub fn solve_linear(
    mut rows: Vec<Vec<BigRational>>,
    mut rhs: Vec<BigRational>,
) -> Option<Vec<BigRational>> {
    let n = rows.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !rows[r][col].is_zero())?;
        rows.swap(col, pivot);
        rhs.swap(col, pivot);
        for r in 0..n {
            if r != col && !rows[r][col].is_zero() {
                let f = &rows[r][col] / &rows[col][col];
                for k in col..n {
                    let sub = &rows[col][k] * &f;
                    rows[r][k] -= sub;
                }
                let sub = &rhs[col] * &f;
                rhs[r] -= sub;
            }
        }
    }
    Some(
        (0..n)
            .map(|i| &rhs[i] / &rows[i][i])
            .collect(),
    )
}

/// Cells of the regular triangulation induced by lifting each point to
/// its height and taking lower faces. None when the heights are not
/// generic enough to induce a triangulation.
pub fn subdivision_from_heights(
    points: &[Vec<i64>],
    heights: &[BigRational],
) -> Option<Vec<Vec<usize>>> {
    let n = points.len();
    let d = points[0].len();
    assert_eq!(heights.len(), n);
    let mut cells = Vec::new();
    for cand in k_subsets(n, d + 1) {
        if ambient_volume(points, &cand) == 0 {
            continue;
        }
        // Affine function a . x + c agreeing with the heights on the
        // cell; the system is square and nonsingular by the volume
        // check.
        let rows: Vec<Vec<BigRational>> = cand
            .iter()
            .map(|&v| {
                let mut row: Vec<BigRational> = points[v]
                    .iter()
                    .map(|&x| BigRational::from_i64(x).unwrap())
                    .collect();
                row.push(BigRational::from_i64(1).unwrap());
                row
            })
            .collect();
        let rhs: Vec<BigRational> = cand.iter().map(|&v| heights[v].clone()).collect();
        let sol = solve_linear(rows, rhs).expect("full-dimensional cell");
        // Lower-hull cell: every other lifted point on or above the
        // plane. A tie on an otherwise-lower cell means the lower
        // face is not a simplex, so the heights induce no
        // triangulation; a tie on a rejected cell is harmless.
        let mut tie = false;
        let mut below = false;
        for p in 0..n {
            if cand.contains(&p) {
                continue;
            }
            let mut val = sol[d].clone();
            for k in 0..d {
                val += &sol[k] * BigRational::from_i64(points[p][k]).unwrap();
            }
            if val > heights[p] {
                below = true;
                break;
            }
            if val == heights[p] {
                tie = true;
            }
        }
        if below {
            continue;
        }
        if tie {
            return None;
        }
        cells.push(cand);
    }
    cells.sort();
    Some(cells)
}

// ---------------------------------------------------------------
// Configuration sweeps.

fn full_dim_2d(points: &[Vec<i64>]) -> bool {
    affine_rank(points) == 2
}

/// All full-dimensional subsets of the 3x3 grid of the given size.
pub fn grid_subsets(size: usize) -> Vec<Vec<Vec<i64>>> {
    let grid: Vec<Vec<i64>> = (0..3i64)
        .flat_map(|x| (0..3i64).map(move |y| vec![x, y]))
        .collect();
    k_subsets(9, size)
        .into_iter()
        .map(|subset| subset.iter().map(|&i| grid[i].clone()).collect())
        .filter(|pts: &Vec<Vec<i64>>| full_dim_2d(pts))
        .collect()
}

/// All collinear configurations on subsets of {0..4}.
pub fn segment_subsets() -> Vec<Vec<Vec<i64>>> {
    let mut out = Vec::new();
    for size in 2..=5usize {
        for subset in k_subsets(5, size) {
            out.push(subset.iter().map(|&x| vec![x as i64]).collect());
        }
    }
    out
}

/// The small exhaustive sweep: full-dimensional subsets of the 3x3
/// grid (all of sizes 4 and 5, seeded samples of sizes 6 and 7),
/// collinear segment configurations from {0..4}, and the mother of
/// all examples.
pub fn sweep_configs() -> Vec<Vec<Vec<i64>>> {
    let mut out: Vec<Vec<Vec<i64>>> = Vec::new();
    out.extend(grid_subsets(4));
    out.extend(grid_subsets(5));
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (size, take) in [(6, 40), (7, 25)] {
        let pool = grid_subsets(size);
        for idx in rand::seq::index::sample(&mut rng, pool.len(), take.min(pool.len())) {
            out.push(pool[idx].clone());
        }
    }
    out.extend(segment_subsets());
    out.push(moae_points());
    out
}

/// Seeded random full-dimensional configurations with d <= 3,
/// n <= 10, coordinates in [0, 4].
pub fn random_configs(seed: u64, count: usize) -> Vec<Vec<Vec<i64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let d = rng.random_range(1..=3usize);
        let n = rng.random_range(d + 2..=10usize);
        let mut pts: Vec<Vec<i64>> = Vec::new();
        let mut tries = 0;
        while pts.len() < n && tries < 200 {
            tries += 1;
            let p: Vec<i64> = (0..d).map(|_| rng.random_range(0..=4i64)).collect();
            if !pts.contains(&p) {
                pts.push(p);
            }
        }
        if pts.len() == n && affine_rank(&pts) == d {
            out.push(pts);
        }
    }
    out
}
