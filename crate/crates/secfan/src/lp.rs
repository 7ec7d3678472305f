//! Exact linear programming over the rationals.
//!
//! A dense two-phase tableau simplex for problems in standard form
//!
//! ```text
//! minimize c.x  subject to  A x = b,  x >= 0
//! ```
//!
//! with integer input data. Arithmetic is exact: the solver first runs
//! over a fixed-width rational type backed by i128 and transparently
//! retries the whole solve with arbitrary precision if any operation
//! would overflow. Entering columns are picked by most-negative
//! reduced cost until the iteration degenerates, then by Bland's rule,
//! which guarantees termination.
//!
//! Row duals are recovered from the reduced costs of the artificial
//! columns, so callers get a certificate for optimality alongside the
//! optimum.

use num::{BigInt, BigRational, Signed, Zero};

/// Consecutive degenerate pivots tolerated before switching the
/// entering rule to Bland's for the remainder of the phase.
const DEGENERACY_PATIENCE: usize = 32;

/// Exact field operations where every step may report overflow.
pub(crate) trait Scalar: Clone + PartialEq + std::fmt::Debug {
    fn zero() -> Self;
    fn from_i64(v: i64) -> Self;
    fn checked_add(&self, o: &Self) -> Option<Self>;
    fn checked_sub(&self, o: &Self) -> Option<Self>;
    fn checked_mul(&self, o: &Self) -> Option<Self>;
    fn checked_div(&self, o: &Self) -> Option<Self>;
    fn neg(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn is_negative(&self) -> bool;
    fn is_positive(&self) -> bool;
    fn to_rational(&self) -> BigRational;
    /// Total order; scalars here always compare.
    fn lt(&self, o: &Self) -> bool;
}

/// Reduced fraction of two i128 words, denominator positive.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) struct Rat128 {
    num: i128,
    den: i128,
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Rat128 {
    fn new(num: i128, den: i128) -> Option<Self> {
        // i128::MIN has no absolute value; treat it as overflow.
        if den == 0 || num == i128::MIN || den == i128::MIN {
            return None;
        }
        let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
        if num == 0 {
            return Some(Rat128 { num: 0, den: 1 });
        }
        let g = gcd_u128(num.unsigned_abs(), den.unsigned_abs()) as i128;
        Some(Rat128 {
            num: num / g,
            den: den / g,
        })
    }
}

impl Scalar for Rat128 {
    fn zero() -> Self {
        Rat128 { num: 0, den: 1 }
    }
    fn from_i64(v: i64) -> Self {
        Rat128 {
            num: v as i128,
            den: 1,
        }
    }
    fn checked_add(&self, o: &Self) -> Option<Self> {
        let g = gcd_u128(self.den as u128, o.den as u128) as i128;
        let (da, db) = (self.den / g, o.den / g);
        let num = self
            .num
            .checked_mul(db)?
            .checked_add(o.num.checked_mul(da)?)?;
        Rat128::new(num, self.den.checked_mul(db)?)
    }
    fn checked_sub(&self, o: &Self) -> Option<Self> {
        self.checked_add(&o.neg())
    }
    fn checked_mul(&self, o: &Self) -> Option<Self> {
        if self.num == 0 || o.num == 0 {
            return Some(Self::zero());
        }
        if self.num == i128::MIN || o.num == i128::MIN {
            return None;
        }
        let g1 = gcd_u128(self.num.unsigned_abs(), o.den as u128) as i128;
        let g2 = gcd_u128(o.num.unsigned_abs(), self.den as u128) as i128;
        let num = (self.num / g1).checked_mul(o.num / g2)?;
        let den = (self.den / g2).checked_mul(o.den / g1)?;
        Rat128::new(num, den)
    }
    fn checked_div(&self, o: &Self) -> Option<Self> {
        let inv = Rat128::new(o.den, o.num)?;
        self.checked_mul(&inv)
    }
    fn neg(&self) -> Self {
        // num is never i128::MIN by construction.
        Rat128 {
            num: -self.num,
            den: self.den,
        }
    }
    fn is_zero(&self) -> bool {
        self.num == 0
    }
    fn is_negative(&self) -> bool {
        self.num < 0
    }
    fn is_positive(&self) -> bool {
        self.num > 0
    }
    fn to_rational(&self) -> BigRational {
        BigRational::new(BigInt::from(self.num), BigInt::from(self.den))
    }
    fn lt(&self, o: &Self) -> bool {
        // a/b < c/d with b, d > 0; cross products fit in i128 only if
        // operands are modest, so widen through to_rational when not.
        match self.num.checked_mul(o.den) {
            Some(l) => match o.num.checked_mul(self.den) {
                Some(r) => l < r,
                None => self.to_rational() < o.to_rational(),
            },
            None => self.to_rational() < o.to_rational(),
        }
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn checked_add(&self, o: &Self) -> Option<Self> {
        Some(self + o)
    }
    fn checked_sub(&self, o: &Self) -> Option<Self> {
        Some(self - o)
    }
    fn checked_mul(&self, o: &Self) -> Option<Self> {
        Some(self * o)
    }
    fn checked_div(&self, o: &Self) -> Option<Self> {
        Some(self / o)
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn to_rational(&self) -> BigRational {
        self.clone()
    }
    fn lt(&self, o: &Self) -> bool {
        self < o
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal {
        objective: BigRational,
        /// Optimal point, one entry per column.
        primal: Vec<BigRational>,
        /// Equality-row multipliers certifying optimality.
        duals: Vec<BigRational>,
    },
    Infeasible,
    Unbounded,
}

/// Solves min c.x, A x = b, x >= 0 exactly. Tries the i128-backed
/// fast path first and falls back to big rationals on overflow.
pub(crate) fn solve(a: &[Vec<i64>], b: &[i64], c: &[i64]) -> LpOutcome {
    match solve_scalar::<Rat128>(a, b, c) {
        Some(out) => out,
        None => solve_scalar::<BigRational>(a, b, c).expect("big rationals cannot overflow"),
    }
}

struct Tableau<S> {
    n_struct: usize,
    cols: usize,
    /// Constraint rows, each of length cols + 1 with the rhs last.
    rows: Vec<Vec<S>>,
    /// Reduced costs, last entry holds minus the objective value.
    obj: Vec<S>,
    basis: Vec<usize>,
    /// Artificial columns barred from re-entering the basis.
    banned: Vec<bool>,
    bland: bool,
    degenerate_streak: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Pivoted,
}

impl<S: Scalar> Tableau<S> {
    fn pivot(&mut self, r: usize, j: usize) -> Option<()> {
        let piv = self.rows[r][j].clone();
        debug_assert!(!piv.is_zero());
        let row: Vec<S> = self.rows[r]
            .iter()
            .map(|v| v.checked_div(&piv))
            .collect::<Option<_>>()?;
        for r2 in 0..self.rows.len() {
            if r2 == r {
                continue;
            }
            let f = self.rows[r2][j].clone();
            if f.is_zero() {
                continue;
            }
            for (dst, src) in self.rows[r2].iter_mut().zip(&row) {
                if !src.is_zero() {
                    *dst = dst.checked_sub(&f.checked_mul(src)?)?;
                }
            }
        }
        let f = self.obj[j].clone();
        if !f.is_zero() {
            for (dst, src) in self.obj.iter_mut().zip(&row) {
                if !src.is_zero() {
                    *dst = dst.checked_sub(&f.checked_mul(src)?)?;
                }
            }
        }
        if self.basis[r] >= self.n_struct {
            self.banned[self.basis[r] - self.n_struct] = true;
        }
        self.rows[r] = row;
        self.basis[r] = j;
        Some(())
    }

    fn eligible(&self, j: usize) -> bool {
        j < self.n_struct || !self.banned[j - self.n_struct]
    }

    fn entering(&self) -> Option<usize> {
        if self.bland {
            (0..self.cols).find(|&j| self.eligible(j) && self.obj[j].is_negative())
        } else {
            let mut best: Option<usize> = None;
            for j in 0..self.cols {
                if self.eligible(j) && self.obj[j].is_negative() {
                    match best {
                        Some(b) if !self.obj[j].lt(&self.obj[b]) => {}
                        _ => best = Some(j),
                    }
                }
            }
            best
        }
    }

    /// Min-ratio leaving row for column j, ties by smallest basis
    /// variable.
    fn leaving(&self, j: usize) -> Option<usize> {
        let rhs = self.cols;
        let mut best: Option<(usize, S)> = None;
        for r in 0..self.rows.len() {
            if !self.rows[r][j].is_positive() {
                continue;
            }
            let ratio = self.rows[r][rhs]
                .checked_div(&self.rows[r][j])
                .expect("nonzero pivot");
            let replace = match &best {
                None => true,
                Some((br, bratio)) => {
                    ratio.lt(bratio)
                        || (ratio == *bratio && self.basis[r] < self.basis[*br])
                }
            };
            if replace {
                best = Some((r, ratio));
            }
        }
        best.map(|(r, _)| r)
    }

    fn step(&mut self) -> Option<Step> {
        let j = match self.entering() {
            Some(j) => j,
            None => return Some(Step::Optimal),
        };
        let r = match self.leaving(j) {
            Some(r) => r,
            None => return Some(Step::Unbounded),
        };
        let degenerate = self.rows[r][self.cols].is_zero();
        self.pivot(r, j)?;
        if degenerate {
            self.degenerate_streak += 1;
            if self.degenerate_streak > DEGENERACY_PATIENCE {
                self.bland = true;
            }
        } else {
            self.degenerate_streak = 0;
        }
        Some(Step::Pivoted)
    }

    fn run(&mut self) -> Option<Step> {
        loop {
            match self.step()? {
                Step::Pivoted => {}
                done => return Some(done),
            }
        }
    }

    /// Current objective value (obj row stores its negative).
    fn objective(&self) -> S {
        self.obj[self.cols].neg()
    }
}

fn solve_scalar<S: Scalar>(a: &[Vec<i64>], b: &[i64], c: &[i64]) -> Option<LpOutcome> {
    let m = a.len();
    let n = c.len();
    debug_assert!(a.iter().all(|row| row.len() == n));
    debug_assert_eq!(b.len(), m);
    let cols = n + m;
    // Orient every row to a nonnegative rhs; duals flip back at the
    // end.
    let negated: Vec<bool> = b.iter().map(|&v| v < 0).collect();
    let mut rows: Vec<Vec<S>> = Vec::with_capacity(m);
    for (i, row) in a.iter().enumerate() {
        let s = if negated[i] { -1 } else { 1 };
        let mut r: Vec<S> = row.iter().map(|&v| S::from_i64(s * v)).collect();
        r.extend((0..m).map(|k| S::from_i64(if k == i { 1 } else { 0 })));
        r.push(S::from_i64(s * b[i]));
        rows.push(r);
    }
    // Phase 1: minimize the artificial sum; reduced costs start as
    // minus the column sums.
    let mut obj = vec![S::zero(); cols + 1];
    for row in &rows {
        for (o, v) in obj.iter_mut().zip(row) {
            if !v.is_zero() {
                *o = o.checked_sub(v)?;
            }
        }
    }
    for k in 0..m {
        obj[n + k] = S::zero();
    }
    let mut t = Tableau {
        n_struct: n,
        cols,
        rows,
        obj,
        basis: (n..cols).collect(),
        banned: vec![false; m],
        bland: false,
        degenerate_streak: 0,
    };
    match t.run()? {
        Step::Unbounded => unreachable!("phase one is bounded below by zero"),
        _ => {}
    }
    if t.objective().is_positive() {
        return Some(LpOutcome::Infeasible);
    }
    // Drive basic artificials out; rows with no structural pivot are
    // redundant and dropped from the tableau (their constraints stay
    // part of the problem, their duals read off the obj row as usual).
    let mut r = 0;
    while r < t.rows.len() {
        if t.basis[r] >= n {
            match (0..n).find(|&j| !t.rows[r][j].is_zero()) {
                Some(j) => {
                    debug_assert!(t.rows[r][cols].is_zero());
                    t.pivot(r, j)?;
                    r += 1;
                }
                None => {
                    t.rows.remove(r);
                    t.basis.remove(r);
                }
            }
        } else {
            r += 1;
        }
    }
    // Phase 2 over the true costs; artificial columns stay passive.
    t.banned = vec![true; m];
    t.bland = false;
    t.degenerate_streak = 0;
    let mut obj = vec![S::zero(); cols + 1];
    for (j, &cv) in c.iter().enumerate() {
        obj[j] = S::from_i64(cv);
    }
    for r in 0..t.rows.len() {
        let cb = obj[t.basis[r]].clone();
        if cb.is_zero() {
            continue;
        }
        let row = t.rows[r].clone();
        for (dst, src) in obj.iter_mut().zip(&row) {
            if !src.is_zero() {
                *dst = dst.checked_sub(&cb.checked_mul(src)?)?;
            }
        }
    }
    t.obj = obj;
    if let Step::Unbounded = t.run()? {
        return Some(LpOutcome::Unbounded);
    }
    let mut primal = vec![<BigRational as Zero>::zero(); n];
    for (r, &bv) in t.basis.iter().enumerate() {
        if bv < n {
            primal[bv] = t.rows[r][cols].to_rational();
        }
    }
    let duals: Vec<BigRational> = (0..m)
        .map(|i| {
            let y = t.obj[n + i].neg().to_rational();
            if negated[i] {
                -y
            } else {
                y
            }
        })
        .collect();
    Some(LpOutcome::Optimal {
        objective: t.objective().to_rational(),
        primal,
        duals,
    })
}
