//! Smith normal form by minimal-pivot elimination.
//!
//! One elimination engine serves every caller. It runs on `i64` with
//! checked arithmetic and is re-run on `BigInt` if anything overflows.
//! When the caller knows that the column lattice contains `D·Z^rows`
//! (the cokernel over `Z/DZ`, i.e. the matrix stacked with `D·I`), the
//! engine may add multiples of those `D·e_i` columns, which keeps every
//! entry in `(-D/2, D/2]`.

use std::cmp::Ordering;
use std::fmt::Debug;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};

use super::ExactMatrix;
use crate::error::{Error, Result};
use crate::group::FiniteAbelianGroup;

/// `U · M · V = D` with `U`, `V` unimodular over `Z`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmithDecomposition {
    /// The diagonal of `D`: nonnegative, `d_1 | d_2 | …`, zeros last.
    pub invariant_factors: Vec<BigInt>,
    pub d: ExactMatrix,
    pub u: Option<ExactMatrix>,
    pub v: Option<ExactMatrix>,
    pub rank: usize,
}

pub(crate) trait Scalar: Clone + Debug + PartialEq {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn is_negative(&self) -> bool;
    fn cmp_abs(&self, other: &Self) -> Ordering;
    /// Nearest integer to `self / d`.
    fn nearest_quotient(&self, d: &Self) -> Self;
    /// `self - q * x`.
    fn sub_mul(&self, q: &Self, x: &Self) -> Option<Self>;
    fn neg(&self) -> Option<Self>;
    /// Balanced residue in `(-m/2, m/2]`.
    fn balanced(&self, m: &Self) -> Self;
    fn gcd(&self, other: &Self) -> Self;
    fn is_divisible_by(&self, d: &Self) -> bool;
    fn to_bigint(&self) -> BigInt;
}

impl Scalar for i64 {
    fn zero() -> Self {
        0
    }
    fn one() -> Self {
        1
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn is_negative(&self) -> bool {
        *self < 0
    }
    fn cmp_abs(&self, other: &Self) -> Ordering {
        self.unsigned_abs().cmp(&other.unsigned_abs())
    }
    fn nearest_quotient(&self, d: &Self) -> Self {
        let (q, r) = (self.div_euclid(*d), self.rem_euclid(*d));
        // r in [0, |d|); round up when 2r > |d|
        if r as u64 * 2 > d.unsigned_abs() {
            if *d > 0 {
                q + 1
            } else {
                q - 1
            }
        } else {
            q
        }
    }
    fn sub_mul(&self, q: &Self, x: &Self) -> Option<Self> {
        self.checked_sub(q.checked_mul(*x)?)
    }
    fn neg(&self) -> Option<Self> {
        self.checked_neg()
    }
    fn balanced(&self, m: &Self) -> Self {
        let r = self.rem_euclid(*m);
        if r > m / 2 {
            r - m
        } else {
            r
        }
    }
    fn gcd(&self, other: &Self) -> Self {
        Integer::gcd(self, other)
    }
    fn is_divisible_by(&self, d: &Self) -> bool {
        *d != 0 && self % d == 0
    }
    fn to_bigint(&self) -> BigInt {
        BigInt::from(*self)
    }
}

impl Scalar for BigInt {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_negative(&self) -> bool {
        self.sign() == Sign::Minus
    }
    fn cmp_abs(&self, other: &Self) -> Ordering {
        self.magnitude().cmp(other.magnitude())
    }
    fn nearest_quotient(&self, d: &Self) -> Self {
        let (q, r) = self.div_mod_floor(d);
        // r has the sign of d, |r| < |d|; stepping q up swaps r for r - d
        if r.magnitude() * 2u32 > *d.magnitude() {
            q + 1
        } else {
            q
        }
    }
    fn sub_mul(&self, q: &Self, x: &Self) -> Option<Self> {
        Some(self - q * x)
    }
    fn neg(&self) -> Option<Self> {
        Some(-self)
    }
    fn balanced(&self, m: &Self) -> Self {
        let r = self.mod_floor(m);
        if &r * 2 > *m {
            r - m
        } else {
            r
        }
    }
    fn gcd(&self, other: &Self) -> Self {
        Integer::gcd(self, other)
    }
    fn is_divisible_by(&self, d: &Self) -> bool {
        !Zero::is_zero(d) && Zero::is_zero(&(self % d))
    }
    fn to_bigint(&self) -> BigInt {
        self.clone()
    }
}

#[derive(Debug)]
struct Overflow;

struct Elimination<T> {
    rows: usize,
    cols: usize,
    a: Vec<T>,
    u: Option<Vec<T>>,
    v: Option<Vec<T>>,
    modulus: Option<T>,
}

fn identity<T: Scalar>(n: usize) -> Vec<T> {
    let mut m = vec![T::zero(); n * n];
    for i in 0..n {
        m[i * n + i] = T::one();
    }
    m
}

impl<T: Scalar> Elimination<T> {
    fn new(rows: usize, cols: usize, a: Vec<T>, transforms: bool, modulus: Option<T>) -> Self {
        let a = match &modulus {
            Some(m) => a.iter().map(|x| x.balanced(m)).collect(),
            None => a,
        };
        Self {
            rows,
            cols,
            a,
            u: transforms.then(|| identity(rows)),
            v: transforms.then(|| identity(cols)),
            modulus,
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> &T {
        &self.a[i * self.cols + j]
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.a.swap(i * self.cols + c, j * self.cols + c);
        }
        if let Some(u) = &mut self.u {
            for c in 0..self.rows {
                u.swap(i * self.rows + c, j * self.rows + c);
            }
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for r in 0..self.rows {
            self.a.swap(r * self.cols + i, r * self.cols + j);
        }
        if let Some(v) = &mut self.v {
            for r in 0..self.cols {
                v.swap(r * self.cols + i, r * self.cols + j);
            }
        }
    }

    /// row_target -= q * row_source
    fn row_sub_mul(&mut self, target: usize, q: &T, source: usize, from: usize) -> Result<(), Overflow> {
        for c in from..self.cols {
            let s = self.a[source * self.cols + c].clone();
            if s.is_zero() {
                continue;
            }
            let idx = target * self.cols + c;
            let mut x = self.a[idx].sub_mul(q, &s).ok_or(Overflow)?;
            if let Some(m) = &self.modulus {
                x = x.balanced(m);
            }
            self.a[idx] = x;
        }
        if let Some(u) = &mut self.u {
            let n = self.rows;
            for c in 0..n {
                let s = u[source * n + c].clone();
                if !s.is_zero() {
                    u[target * n + c] = u[target * n + c].sub_mul(q, &s).ok_or(Overflow)?;
                }
            }
        }
        Ok(())
    }

    /// col_target -= q * col_source
    fn col_sub_mul(&mut self, target: usize, q: &T, source: usize, from: usize) -> Result<(), Overflow> {
        for r in from..self.rows {
            let s = self.a[r * self.cols + source].clone();
            if s.is_zero() {
                continue;
            }
            let idx = r * self.cols + target;
            let mut x = self.a[idx].sub_mul(q, &s).ok_or(Overflow)?;
            if let Some(m) = &self.modulus {
                x = x.balanced(m);
            }
            self.a[idx] = x;
        }
        if let Some(v) = &mut self.v {
            let n = self.cols;
            for r in 0..n {
                let s = v[r * n + source].clone();
                if !s.is_zero() {
                    v[r * n + target] = v[r * n + target].sub_mul(q, &s).ok_or(Overflow)?;
                }
            }
        }
        Ok(())
    }

    fn row_add(&mut self, target: usize, source: usize, from: usize) -> Result<(), Overflow> {
        let minus_one = T::one().neg().ok_or(Overflow)?;
        self.row_sub_mul(target, &minus_one, source, from)
    }

    fn negate_row(&mut self, i: usize) -> Result<(), Overflow> {
        for c in 0..self.cols {
            let idx = i * self.cols + c;
            self.a[idx] = self.a[idx].neg().ok_or(Overflow)?;
        }
        if let Some(u) = &mut self.u {
            let n = self.rows;
            for c in 0..n {
                u[i * n + c] = u[i * n + c].neg().ok_or(Overflow)?;
            }
        }
        Ok(())
    }

    /// Nonzero entry of least absolute value in the trailing block; ties go
    /// to the lowest row, then the lowest column.
    fn find_pivot(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize)> = None;
        for i in t..self.rows {
            for j in t..self.cols {
                let x = self.at(i, j);
                if x.is_zero() {
                    continue;
                }
                match best {
                    Some((bi, bj)) if x.cmp_abs(self.at(bi, bj)) != Ordering::Less => {}
                    _ => best = Some((i, j)),
                }
            }
        }
        best
    }

    fn run(&mut self) -> Result<(), Overflow> {
        let n = self.rows.min(self.cols);
        for t in 0..n {
            let Some((pi, pj)) = self.find_pivot(t) else {
                break;
            };
            self.swap_rows(t, pi);
            self.swap_cols(t, pj);
            loop {
                let pivot = self.at(t, t).clone();
                for i in t + 1..self.rows {
                    let x = self.at(i, t);
                    if !x.is_zero() {
                        let q = x.nearest_quotient(&pivot);
                        self.row_sub_mul(i, &q, t, t)?;
                    }
                }
                for j in t + 1..self.cols {
                    let x = self.at(t, j);
                    if !x.is_zero() {
                        let q = x.nearest_quotient(&pivot);
                        self.col_sub_mul(j, &q, t, t)?;
                    }
                }
                // Remainders are strictly smaller than the pivot; promote the
                // smallest and go again.
                let mut smallest: Option<(usize, usize)> = None;
                let consider = |best: &mut Option<(usize, usize)>, i: usize, j: usize, me: &Self| {
                    if me.at(i, j).is_zero() {
                        return;
                    }
                    match *best {
                        Some((bi, bj)) if me.at(i, j).cmp_abs(me.at(bi, bj)) != Ordering::Less => {}
                        _ => *best = Some((i, j)),
                    }
                };
                for i in t + 1..self.rows {
                    consider(&mut smallest, i, t, self);
                }
                for j in t + 1..self.cols {
                    consider(&mut smallest, t, j, self);
                }
                if let Some((i, j)) = smallest {
                    self.swap_rows(t, i);
                    self.swap_cols(t, j);
                    continue;
                }
                if let Some(m) = &self.modulus {
                    // D·e_t lies in the lattice, so p·e_t may become gcd(p, D)·e_t.
                    let g = self.at(t, t).gcd(m);
                    self.a[t * self.cols + t] = g;
                }
                let pivot = self.at(t, t).clone();
                let offender = (t + 1..self.rows)
                    .find(|&i| (t + 1..self.cols).any(|j| !self.at(i, j).is_divisible_by(&pivot)));
                match offender {
                    Some(i) => self.row_add(t, i, t)?,
                    None => break,
                }
            }
            if self.at(t, t).is_negative() {
                self.negate_row(t)?;
            }
        }
        Ok(())
    }

    fn diagonal(&self) -> Vec<BigInt> {
        (0..self.rows.min(self.cols))
            .map(|t| self.at(t, t).to_bigint())
            .collect()
    }
}

fn to_exact(rows: usize, cols: usize, data: &[impl Scalar]) -> ExactMatrix {
    ExactMatrix::new(rows, cols, 0, data.iter().map(Scalar::to_bigint).collect())
        .expect("dimensions already validated")
}

/// Smith normal form of an integer matrix, optionally with transforms.
pub fn smith_normal_form(m: &ExactMatrix, with_transforms: bool) -> Result<SmithDecomposition> {
    if m.modulus() != 0 {
        return Err(Error::Modulus {
            expected: 0,
            found: m.modulus(),
        });
    }
    let (rows, cols) = (m.rows(), m.cols());
    let finish = |diag: Vec<BigInt>, u: Option<ExactMatrix>, v: Option<ExactMatrix>| {
        let rank = diag.iter().filter(|d| !Zero::is_zero(*d)).count();
        let mut d = ExactMatrix::zeros(rows, cols, 0).expect("validated");
        for (t, x) in diag.iter().enumerate() {
            d.set(t, t, x.clone());
        }
        SmithDecomposition {
            invariant_factors: diag,
            d,
            u,
            v,
            rank,
        }
    };
    if let Some(small) = m.to_i64() {
        let mut e = Elimination::new(rows, cols, small, with_transforms, None);
        if e.run().is_ok() {
            let u = e.u.as_ref().map(|u| to_exact(rows, rows, u));
            let v = e.v.as_ref().map(|v| to_exact(cols, cols, v));
            return Ok(finish(e.diagonal(), u, v));
        }
    }
    let mut e = Elimination::new(rows, cols, m.entries().to_vec(), with_transforms, None);
    e.run().expect("BigInt arithmetic cannot overflow");
    let u = e.u.as_ref().map(|u| to_exact(rows, rows, u));
    let v = e.v.as_ref().map(|v| to_exact(cols, cols, v));
    Ok(finish(e.diagonal(), u, v))
}

fn group_from_diagonal(rows: usize, diag: &[BigInt]) -> FiniteAbelianGroup {
    let mut factors: Vec<BigUint> = diag.iter().map(|d| d.magnitude().clone()).collect();
    // rows beyond the diagonal carry no relations
    factors.resize(rows, BigUint::zero());
    FiniteAbelianGroup::from_factors(factors, 0)
}

/// `Z^rows / (column span of M)`. For square `M` this is `coker(M)`;
/// rectangular input is accepted and read the same way.
pub fn cokernel(m: &ExactMatrix) -> Result<FiniteAbelianGroup> {
    if m.modulus() != 0 {
        return Err(Error::Modulus {
            expected: 0,
            found: m.modulus(),
        });
    }
    let snf = smith_normal_form(m, false)?;
    Ok(group_from_diagonal(m.rows(), &snf.invariant_factors))
}

/// Cokernel over `Z/aZ`: the integer cokernel of the lift of `M`
/// augmented by `a·I`.
pub fn cokernel_mod(m: &ExactMatrix) -> Result<FiniteAbelianGroup> {
    let a = m.modulus();
    if a == 0 {
        return Err(Error::InvalidArgument(
            "cokernel_mod needs a matrix over Z/aZ with a >= 1".into(),
        ));
    }
    if let (Some(data), Ok(a_small)) = (m.to_i64(), i64::try_from(a)) {
        if let Some(g) = cokernel_of_small(m.rows(), m.cols(), data, a_small) {
            return Ok(g);
        }
    }
    let mut e = Elimination::new(
        m.rows(),
        m.cols(),
        m.entries().to_vec(),
        false,
        Some(BigInt::from(a)),
    );
    e.run().expect("BigInt arithmetic cannot overflow");
    Ok(modular_group(m.rows(), &e.diagonal(), &BigInt::from(a)))
}

fn modular_group(rows: usize, diag: &[BigInt], a: &BigInt) -> FiniteAbelianGroup {
    let mut factors: Vec<BigUint> = diag
        .iter()
        .map(|d| Integer::gcd(d, a).magnitude().clone())
        .collect();
    factors.resize(rows, a.magnitude().clone());
    FiniteAbelianGroup::from_factors(factors, 0)
}

/// Cokernel over `Z/aZ` of a row-major matrix of machine integers; `None`
/// only if `i64` arithmetic overflowed (not possible for `a < 2^31`).
pub(crate) fn cokernel_of_small(
    rows: usize,
    cols: usize,
    data: Vec<i64>,
    a: i64,
) -> Option<FiniteAbelianGroup> {
    let mut e = Elimination::new(rows, cols, data, false, Some(a));
    e.run().ok()?;
    let diag: Vec<BigInt> = e.diagonal();
    Some(modular_group(rows, &diag, &BigInt::from(a)))
}

/// Index of the subgroup of `∏ Z/d_i` generated by the given columns
/// (each column a vector of length `moduli.len()`).
pub(crate) fn column_span_index(moduli: &[u64], columns: &[Vec<u64>]) -> BigUint {
    let r = moduli.len();
    if r == 0 {
        return BigUint::one();
    }
    // Z^r / (generators + diag(d)) has order [G : span].
    let cols = columns.len() + r;
    let lcm = moduli.iter().try_fold(1u64, |l, &d| {
        let l = l.lcm(&d);
        (l < 1 << 31).then_some(l)
    });
    if let Some(lcm) = lcm.filter(|&l| l > 0) {
        let mut data = vec![0i64; r * cols];
        for (j, col) in columns.iter().enumerate() {
            for i in 0..r {
                data[i * cols + j] = (col[i] % lcm) as i64;
            }
        }
        for (i, &d) in moduli.iter().enumerate() {
            data[i * cols + columns.len() + i] = d as i64;
        }
        if let Some(g) = cokernel_of_small(r, cols, data, lcm as i64) {
            return g.order().expect("finite");
        }
    }
    let mut data = vec![<BigInt as Zero>::zero(); r * cols];
    for (j, col) in columns.iter().enumerate() {
        for i in 0..r {
            data[i * cols + j] = BigInt::from(col[i]);
        }
    }
    for (i, &d) in moduli.iter().enumerate() {
        data[i * cols + columns.len() + i] = BigInt::from(d);
    }
    let m = ExactMatrix::new(r, cols, 0, data).expect("nonempty");
    let g = cokernel(&m).expect("integer matrix");
    g.order().expect("relations include diag(d), so the quotient is finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn m(rows: &[&[i64]], a: u64) -> ExactMatrix {
        ExactMatrix::from_rows(rows, a).unwrap()
    }

    fn factors(s: &SmithDecomposition) -> Vec<i64> {
        s.invariant_factors.iter().map(|x| x.to_i64().unwrap()).collect()
    }

    #[test]
    fn snf_examples() {
        let s = smith_normal_form(&m(&[&[2, 4], &[6, 8]], 0), true).unwrap();
        assert_eq!(factors(&s), vec![2, 4]);
        let u = s.u.unwrap();
        let v = s.v.unwrap();
        assert_eq!(u.mul(&m(&[&[2, 4], &[6, 8]], 0)).unwrap().mul(&v).unwrap(), s.d);

        let s = smith_normal_form(&ExactMatrix::identity(3, 0).unwrap(), false).unwrap();
        assert_eq!(factors(&s), vec![1, 1, 1]);
        let s = smith_normal_form(&m(&[&[0]], 0), false).unwrap();
        assert_eq!(factors(&s), vec![0]);
        assert_eq!(s.rank, 0);
    }

    #[test]
    fn snf_rejects_modular_input() {
        assert!(smith_normal_form(&m(&[&[1]], 3), false).is_err());
    }

    #[test]
    fn cokernel_examples() {
        let g = cokernel(&ExactMatrix::diagonal(&[2, 3], 0).unwrap()).unwrap();
        assert_eq!(g, "6".parse().unwrap());
        let g = cokernel(&ExactMatrix::zeros(2, 2, 0).unwrap()).unwrap();
        assert_eq!(g, FiniteAbelianGroup::free(2));
        let g = cokernel(&m(&[&[2, 1], &[1, 1]], 0)).unwrap();
        assert!(g.is_trivial());
    }

    #[test]
    fn cokernel_mod_examples() {
        assert_eq!(cokernel_mod(&m(&[&[2]], 4)).unwrap(), "2".parse().unwrap());
        assert_eq!(
            cokernel_mod(&ExactMatrix::zeros(2, 2, 4).unwrap()).unwrap(),
            "4,4".parse().unwrap()
        );
        assert!(cokernel_mod(&ExactMatrix::identity(3, 9).unwrap()).unwrap().is_trivial());
        assert!(cokernel_mod(&ExactMatrix::zeros(2, 2, 1).unwrap()).unwrap().is_trivial());
        // [[2, 3], [0, 0]] over Z/6: column span is <(2,0),(3,0)> = Z/6 x 0
        assert_eq!(cokernel_mod(&m(&[&[2, 3], &[0, 0]], 6)).unwrap(), "6".parse().unwrap());
    }

    #[test]
    fn overflow_falls_back_to_bigint() {
        let big = 1i64 << 40;
        let x = m(&[&[big, big + 1, 3], &[big - 1, big, 7], &[5, big, big]], 0);
        let s = smith_normal_form(&x, true).unwrap();
        let u = s.u.clone().unwrap();
        let v = s.v.clone().unwrap();
        assert_eq!(u.mul(&x).unwrap().mul(&v).unwrap(), s.d);
    }

    #[test]
    fn span_index() {
        // <(1,0)> in Z/2 x Z/2 has index 2
        assert_eq!(column_span_index(&[2, 2], &[vec![1, 0]]), BigUint::from(2u32));
        assert_eq!(column_span_index(&[2, 4], &[vec![1, 0], vec![0, 1]]), BigUint::from(1u32));
        assert_eq!(column_span_index(&[4], &[vec![2]]), BigUint::from(2u32));
        assert_eq!(column_span_index(&[3], &[]), BigUint::from(3u32));
    }

    #[test]
    fn nearest_quotient_rounds() {
        assert_eq!(7i64.nearest_quotient(&2), 3);
        assert_eq!((-7i64).nearest_quotient(&2), -4);
        assert_eq!(5i64.nearest_quotient(&-3), -2);
        assert_eq!(BigInt::from(5).nearest_quotient(&BigInt::from(-3)), BigInt::from(-2));
        assert_eq!(BigInt::from(-8).nearest_quotient(&BigInt::from(3)), BigInt::from(-3));
    }
}
