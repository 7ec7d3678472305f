//! Regularity decisions with exact certificates.
//!
//! A triangulation is regular when some height assignment lifts every
//! point so that each cell's lifted simplex sees all other lifted
//! points strictly above its affine hull. The decision runs as one
//! exact linear program whose optimum is 0 or 1, never in between:
//! heights are affine-gauge-fixed on a basis, the slack target is
//! capped at 1 so any positive slack rescales to 1.
//!
//! The program solved is the dual, whose tableau has one row per
//! non-basis point rather than one per (cell, point) pair; heights are
//! read off the dual multipliers. Either answer is re-verified from
//! first principles before it is returned.

use std::collections::HashMap;

use num::{BigInt, BigRational, One, Signed, Zero};

use crate::config::{ConfigError, Mask, PointConfiguration, Simplex};
use crate::lp::{self, LpOutcome};
use crate::triang::Triangulation;

/// Heights certifying regularity, one per point of the configuration,
/// together with the smallest slack across all (cell, point)
/// inequalities.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightCertificate {
    pub heights: Vec<BigRational>,
    pub margin: BigRational,
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// One above-ness inequality, written over the non-basis height
/// coordinates and gcd-reduced: vol * w_p - sum c_j w_{cell_j} >= margin.
fn fold_row(
    cfg: &PointConfiguration,
    cell: &Simplex,
    p: usize,
    pos: &[usize],
    width: usize,
) -> Result<Vec<i64>, ConfigError> {
    let rep = cfg.affine_rep(cell, p)?;
    let mut a = vec![0i64; width];
    if pos[p] != usize::MAX {
        a[pos[p]] += i64::try_from(rep.vol).expect("volume fits i64");
    }
    for (j, &v) in cell.vertices().iter().enumerate() {
        if pos[v] != usize::MAX {
            a[pos[v]] -= rep.coeffs[j];
        }
    }
    let g = a.iter().fold(0u64, |g, &x| gcd_u64(g, x.unsigned_abs()));
    // The support of the underlying affine dependence never fits
    // inside the affinely independent gauge basis.
    debug_assert!(g > 0);
    if g > 1 {
        for x in &mut a {
            *x /= g as i64;
        }
    }
    Ok(a)
}

/// The inequalities of the triangulation, deduplicated. Strict local
/// convexity across every interior wall plus one strict containment
/// row per unused point forces the whole (cell, point) system: the
/// lifted surface is then globally convex with equality region
/// exactly one cell, so every other point sits strictly above every
/// cell's hyperplane. This keeps the program at one row per wall
/// instead of one per pair.
fn reduced_rows(
    cfg: &PointConfiguration,
    t: &Triangulation,
    pos: &[usize],
    width: usize,
) -> Result<Vec<Vec<i64>>, ConfigError> {
    let mut rows = std::collections::BTreeSet::new();
    let cells = t.cells();
    let mut walls: HashMap<Mask, Vec<(usize, usize)>> = HashMap::new();
    for (ci, cell) in cells.iter().enumerate() {
        for &v in cell.vertices() {
            walls
                .entry(cell.mask() & !(1 << v))
                .or_default()
                .push((ci, v));
        }
    }
    for occupants in walls.values() {
        match occupants.as_slice() {
            [_] => {} // hull facet
            &[(c1, q1), (c2, q2)] => {
                // Both directions reduce to the same circuit row.
                rows.insert(fold_row(cfg, &cells[c1], q2, pos, width)?);
                rows.insert(fold_row(cfg, &cells[c2], q1, pos, width)?);
            }
            more => unreachable!("wall shared by {} cells", more.len()),
        }
    }
    let used = t.used_points();
    for p in 0..cfg.n() {
        if used & (1 << p) != 0 {
            continue;
        }
        let home = cells
            .iter()
            .find(|cell| {
                cfg.affine_rep(cell, p)
                    .map(|rep| rep.coeffs.iter().all(|&c| c >= 0))
                    .unwrap_or(false)
            })
            .expect("a covering triangulation contains every point");
        rows.insert(fold_row(cfg, home, p, pos, width)?);
    }
    Ok(rows.into_iter().collect())
}

/// Decides regularity; Some carries verified heights with margin at
/// least 1, None means no heights exist at all.
pub fn is_regular(
    cfg: &PointConfiguration,
    t: &Triangulation,
) -> Result<Option<HeightCertificate>, ConfigError> {
    let n = cfg.n();
    let basis = cfg.affine_basis();
    let nonbasis: Vec<usize> = (0..n).filter(|i| !basis.contains(i)).collect();
    let mut pos = vec![usize::MAX; n];
    for (k, &i) in nonbasis.iter().enumerate() {
        pos[i] = k;
    }
    let rows = reduced_rows(cfg, t, &pos, nonbasis.len())?;
    let m = rows.len();
    // Dual program: one equality row per non-basis point plus the
    // normalization row; one column per inequality plus the slack
    // target.
    let mut dmat: Vec<Vec<i64>> = Vec::with_capacity(nonbasis.len() + 1);
    for k in 0..nonbasis.len() {
        let mut row: Vec<i64> = rows.iter().map(|r| r[k]).collect();
        row.push(0);
        dmat.push(row);
    }
    dmat.push(vec![1; m + 1]);
    let mut rhs = vec![0i64; nonbasis.len()];
    rhs.push(1);
    let mut cost = vec![0i64; m];
    cost.push(1);
    let (objective, primal, duals) = match lp::solve(&dmat, &rhs, &cost) {
        LpOutcome::Optimal {
            objective,
            primal,
            duals,
        } => (objective, primal, duals),
        other => unreachable!("the regularity program is feasible and bounded, got {other:?}"),
    };
    if objective.is_zero() {
        // Cross-check the obstruction: a convex combination of the
        // inequality rows that sums to the zero functional, so no
        // heights can make every row positive.
        assert!(primal[m].is_zero());
        let total: BigRational = primal[..m].iter().sum();
        assert!(total.is_one());
        for k in 0..nonbasis.len() {
            let s: BigRational = rows
                .iter()
                .zip(&primal[..m])
                .map(|(r, z)| BigRational::from_integer(BigInt::from(r[k])) * z)
                .sum();
            assert!(s.is_zero());
        }
        return Ok(None);
    }
    assert!(objective.is_one(), "slack optimum must be 0 or 1");
    let mut heights = vec![BigRational::zero(); n];
    for (k, &i) in nonbasis.iter().enumerate() {
        heights[i] = -duals[k].clone();
    }
    // Clear denominators: integer heights make every strict slack an
    // integer, hence at least 1.
    let scale = heights
        .iter()
        .fold(BigInt::one(), |l, h| num::integer::lcm(l, h.denom().clone()));
    if !scale.is_one() {
        let scale = BigRational::from_integer(scale);
        for h in &mut heights {
            *h *= &scale;
        }
    }
    let margin = certificate_check(cfg, t, &heights)?
        .expect("solved heights must satisfy every inequality");
    assert!(margin >= BigRational::one());
    Ok(Some(HeightCertificate { heights, margin }))
}

/// Evaluates every above-ness inequality at the given heights. Returns
/// the smallest slack when all hold strictly, None when some pair
/// fails; a triangulation whose cells exhaust the points yields the
/// conventional margin 1.
pub fn certificate_check(
    cfg: &PointConfiguration,
    t: &Triangulation,
    heights: &[BigRational],
) -> Result<Option<BigRational>, ConfigError> {
    assert_eq!(heights.len(), cfg.n());
    let mut margin: Option<BigRational> = None;
    for cell in t.cells() {
        for p in 0..cfg.n() {
            if cell.contains(p) {
                continue;
            }
            let rep = cfg.affine_rep(cell, p)?;
            let mut val = BigRational::from_integer(BigInt::from(rep.vol)) * &heights[p];
            for (j, &v) in cell.vertices().iter().enumerate() {
                val -= BigRational::from_integer(BigInt::from(rep.coeffs[j])) * &heights[v];
            }
            if !val.is_positive() {
                return Ok(None);
            }
            margin = Some(match margin {
                Some(mv) if mv < val => mv,
                _ => val,
            });
        }
    }
    Ok(Some(margin.unwrap_or_else(BigRational::one)))
}
