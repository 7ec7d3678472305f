//! Small exact linear algebra over arbitrary precision integers.
//!
//! Everything here works on dense row matrices of `BigInt`. The sizes
//! involved are tiny (at most a few dozen rows), so clarity wins over
//! asymptotics.

use num::integer::Integer;
use num::{BigInt, BigRational, One, Signed, Zero};

/// Row-style Hermite normal form: `rows` are the nonzero echelon rows
/// with positive pivots, `pivot_cols[k]` is the pivot column of row `k`.
pub(crate) struct Hnf {
    pub rows: Vec<Vec<BigInt>>,
    pub pivot_cols: Vec<usize>,
}

impl Hnf {
    pub fn rank(&self) -> usize {
        self.pivot_cols.len()
    }
}

pub(crate) fn hnf(mut rows: Vec<Vec<BigInt>>) -> Hnf {
    let m = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    let mut pivot_cols = Vec::new();
    for col in 0..m {
        loop {
            let mut best: Option<usize> = None;
            for i in r..rows.len() {
                if !rows[i][col].is_zero()
                    && best.is_none_or(|b: usize| rows[i][col].abs() < rows[b][col].abs())
                {
                    best = Some(i);
                }
            }
            let Some(b) = best else { break };
            rows.swap(r, b);
            let mut cleared = true;
            for i in r + 1..rows.len() {
                if rows[i][col].is_zero() {
                    continue;
                }
                let q = &rows[i][col] / &rows[r][col];
                if !q.is_zero() {
                    row_sub_mul(&mut rows, i, r, &q);
                }
                if !rows[i][col].is_zero() {
                    cleared = false;
                }
            }
            if cleared {
                if rows[r][col].is_negative() {
                    for x in &mut rows[r] {
                        *x = -std::mem::take(x);
                    }
                }
                for i in 0..r {
                    let q = rows[i][col].div_floor(&rows[r][col]);
                    if !q.is_zero() {
                        row_sub_mul(&mut rows, i, r, &q);
                    }
                }
                pivot_cols.push(col);
                r += 1;
                break;
            }
        }
    }
    rows.truncate(r);
    Hnf { rows, pivot_cols }
}

/// rows[i] -= q * rows[j]
fn row_sub_mul(rows: &mut [Vec<BigInt>], i: usize, j: usize, q: &BigInt) {
    debug_assert_ne!(i, j);
    let (a, b) = if i < j {
        let (lo, hi) = rows.split_at_mut(j);
        (&mut lo[i], &hi[0])
    } else {
        let (lo, hi) = rows.split_at_mut(i);
        (&mut hi[0], &lo[j])
    };
    for (x, y) in a.iter_mut().zip(b) {
        *x -= q * y;
    }
}

pub(crate) fn rank(rows: Vec<Vec<BigInt>>) -> usize {
    hnf(rows).rank()
}

/// Solves `x * h.rows == target` over the integers, if possible.
pub(crate) fn solve_left(h: &Hnf, target: &[BigInt]) -> Option<Vec<BigInt>> {
    let mut res: Vec<BigInt> = target.to_vec();
    let mut x = Vec::with_capacity(h.rank());
    for (row, &pc) in h.rows.iter().zip(&h.pivot_cols) {
        let (q, rem) = res[pc].div_rem(&row[pc]);
        if !rem.is_zero() {
            return None;
        }
        if !q.is_zero() {
            for (r, y) in res.iter_mut().zip(row) {
                *r -= &q * y;
            }
        }
        x.push(q);
    }
    if res.iter().all(Zero::is_zero) {
        Some(x)
    } else {
        None
    }
}

/// Solves `x * h.rows == target` over the rationals, if possible.
/// Succeeds exactly when the target lies in the row span.
pub(crate) fn solve_left_rational(h: &Hnf, target: &[BigInt]) -> Option<Vec<BigRational>> {
    let mut res: Vec<BigRational> = target
        .iter()
        .map(|t| BigRational::from_integer(t.clone()))
        .collect();
    let mut x = Vec::with_capacity(h.rank());
    for (row, &pc) in h.rows.iter().zip(&h.pivot_cols) {
        let q = &res[pc] / BigRational::from_integer(row[pc].clone());
        if !q.is_zero() {
            for (r, y) in res.iter_mut().zip(row) {
                *r -= &q * BigRational::from_integer(y.clone());
            }
        }
        x.push(q);
    }
    if res.iter().all(Zero::is_zero) {
        Some(x)
    } else {
        None
    }
}

/// Determinant over the rationals by Gaussian elimination.
pub(crate) fn det_rat(mut m: Vec<Vec<BigRational>>) -> BigRational {
    let n = m.len();
    if n == 0 {
        return BigRational::one();
    }
    debug_assert!(m.iter().all(|r| r.len() == n));
    let mut det = BigRational::one();
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| !m[i][k].is_zero()) else {
            return BigRational::zero();
        };
        if p != k {
            m.swap(k, p);
            det = -det;
        }
        det *= m[k][k].clone();
        for i in k + 1..n {
            if m[i][k].is_zero() {
                continue;
            }
            let f = &m[i][k] / &m[k][k];
            for j in k..n {
                let sub = &f * &m[k][j];
                m[i][j] -= sub;
            }
        }
    }
    det
}

/// Fraction-free determinant (Bareiss). Consumes its input.
pub(crate) fn det(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::from(1);
    }
    debug_assert!(m.iter().all(|r| r.len() == n));
    let mut sign = 1i32;
    let mut prev = BigInt::from(1);
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            let Some(s) = (k + 1..n).find(|&i| !m[i][k].is_zero()) else {
                return BigInt::zero();
            };
            m.swap(k, s);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = num / &prev;
            }
            m[i][k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    let d = std::mem::take(&mut m[n - 1][n - 1]);
    if sign < 0 {
        -d
    } else {
        d
    }
}

pub(crate) fn big_row(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}
