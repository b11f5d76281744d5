//! Dense matrices over `Z` and `Z/aZ`.

mod smith;
pub(crate) mod small;

pub use smith::{cokernel, cokernel_mod, smith_normal_form, SmithDecomposition};
pub(crate) use smith::{cokernel_of_small, column_span_index};

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::is_prime;

/// Dense row-major matrix over `Z` (`modulus == 0`) or `Z/aZ`
/// (`modulus == a >= 1`). Entries over `Z/aZ` are kept in `[0, a)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExactMatrix {
    rows: usize,
    cols: usize,
    modulus: u64,
    entries: Vec<BigInt>,
}

impl ExactMatrix {
    pub fn new(rows: usize, cols: usize, modulus: u64, entries: Vec<BigInt>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        let mut m = Self {
            rows,
            cols,
            modulus,
            entries,
        };
        m.normalize();
        Ok(m)
    }

    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R], modulus: u64) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if rows.iter().any(|r| r.as_ref().len() != ncols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let entries = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().map(|&x| BigInt::from(x)))
            .collect();
        Self::new(nrows, ncols, modulus, entries)
    }

    pub fn zeros(rows: usize, cols: usize, modulus: u64) -> Result<Self> {
        Self::new(rows, cols, modulus, vec![BigInt::zero(); rows * cols])
    }

    pub fn identity(n: usize, modulus: u64) -> Result<Self> {
        let mut m = Self::zeros(n, n, modulus)?;
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        Ok(m)
    }

    pub fn diagonal(diag: &[i64], modulus: u64) -> Result<Self> {
        let n = diag.len();
        let mut m = Self::zeros(n, n, modulus)?;
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, BigInt::from(d));
        }
        Ok(m)
    }

    fn normalize(&mut self) {
        if self.modulus > 0 {
            let a = BigInt::from(self.modulus);
            for e in &mut self.entries {
                *e = e.mod_floor(&a);
            }
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: BigInt) {
        let value = if self.modulus > 0 {
            value.mod_floor(&BigInt::from(self.modulus))
        } else {
            value
        };
        self.entries[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                entries.push(self.get(i, j).clone());
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            modulus: self.modulus,
            entries,
        }
    }

    fn check_same_ring(&self, other: &Self) -> Result<()> {
        if self.modulus != other.modulus {
            return Err(Error::Modulus {
                expected: self.modulus,
                found: other.modulus,
            });
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same_ring(other)?;
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut entries = vec![BigInt::zero(); self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let x = self.get(i, k);
                if x.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    entries[i * other.cols + j] += x * other.get(k, j);
                }
            }
        }
        Self::new(self.rows, other.cols, self.modulus, entries)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&BigInt, &BigInt) -> BigInt) -> Result<Self> {
        self.check_same_ring(other)?;
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::Dimension(format!(
                "shape {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| f(a, b))
            .collect();
        Self::new(self.rows, self.cols, self.modulus, entries)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, factor: i64) -> Self {
        let entries = self.entries.iter().map(|e| e * factor).collect();
        Self::new(self.rows, self.cols, self.modulus, entries).expect("same shape")
    }

    /// The same entries viewed over `Z/aZ`.
    pub fn reduce_mod(&self, a: u64) -> Result<Self> {
        if a == 0 {
            return Err(Error::InvalidArgument("modulus must be positive".into()));
        }
        Self::new(self.rows, self.cols, a, self.entries.clone())
    }

    /// Entries lifted to `Z` (representatives in `[0, a)`).
    pub fn lift(&self) -> Self {
        Self {
            modulus: 0,
            ..self.clone()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    /// Zero diagonal and `c_ij + c_ji = 0` in the ring.
    pub fn is_alternating(&self) -> bool {
        if !self.is_square() {
            return false;
        }
        let a = BigInt::from(self.modulus);
        let vanishes = |x: BigInt| {
            if self.modulus > 0 {
                x.mod_floor(&a).is_zero()
            } else {
                x.is_zero()
            }
        };
        (0..self.rows).all(|i| {
            vanishes(self.get(i, i).clone())
                && (i + 1..self.cols).all(|j| vanishes(self.get(i, j) + self.get(j, i)))
        })
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (i + 1..self.cols).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// gcd of the entries, taken together with the modulus: 0 for the zero
    /// matrix over `Z`, `a` for the zero matrix over `Z/aZ`.
    pub fn content(&self) -> BigInt {
        let start = BigInt::from(self.modulus);
        self.entries.iter().fold(start, |g, e| g.gcd(e))
    }

    /// Rank of the matrix reduced mod `p`, by elimination over `F_p`.
    pub fn rank_mod_p(&self, p: u64) -> Result<usize> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        let pb = BigInt::from(p);
        let data: Vec<u64> = self
            .entries
            .iter()
            .map(|e| e.mod_floor(&pb).to_u64().expect("residue fits"))
            .collect();
        Ok(small::rank_mod_prime(self.rows, self.cols, data, p))
    }

    /// Minimal number of generators of the cokernel.
    pub fn min_generators_cokernel(&self) -> Result<usize> {
        if !self.is_square() {
            return Err(Error::Dimension("cokernel generators need a square matrix".into()));
        }
        let g = if self.modulus == 0 {
            cokernel(self)?
        } else {
            cokernel_mod(self)?
        };
        Ok(g.num_generators())
    }

    /// Entries as `i64`, if they all fit.
    pub fn to_i64(&self) -> Option<Vec<i64>> {
        self.entries.iter().map(|e| e.to_i64()).collect()
    }

    pub fn to_rows_i64(&self) -> Option<Vec<Vec<i64>>> {
        let flat = self.to_i64()?;
        Some(flat.chunks(self.cols).map(<[i64]>::to_vec).collect())
    }

    pub fn to_json(&self) -> Result<MatrixJson> {
        let rows = self
            .to_rows_i64()
            .ok_or_else(|| Error::InvalidArgument("entries exceed the i64 range of the JSON schema".into()))?;
        Ok(MatrixJson {
            modulus: self.modulus,
            rows,
        })
    }

    pub fn from_json(json: &MatrixJson) -> Result<Self> {
        Self::from_rows(&json.rows, json.modulus)
    }

    /// Largest absolute value among the entries.
    pub fn max_abs_entry(&self) -> BigInt {
        self.entries
            .iter()
            .map(|e| e.abs())
            .max()
            .unwrap_or_else(BigInt::zero)
    }
}

impl fmt::Debug for ExactMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExactMatrix(mod {}) [", self.modulus)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|e| e.to_string()).collect();
            write!(f, "[{}]", row.join(", "))?;
            if i + 1 < self.rows {
                write!(f, ", ")?;
            }
        }
        write!(f, "]")
    }
}

/// On-disk matrix schema: `{"modulus": a, "rows": [[...], ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixJson {
    #[serde(default)]
    pub modulus: u64,
    pub rows: Vec<Vec<i64>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]], a: u64) -> ExactMatrix {
        ExactMatrix::from_rows(rows, a).unwrap()
    }

    #[test]
    fn entries_reduced() {
        let x = m(&[&[-1, 5], &[4, 2]], 4);
        assert_eq!(x.to_rows_i64().unwrap(), vec![vec![3, 1], vec![0, 2]]);
    }

    #[test]
    fn empty_dimensions_rejected() {
        assert!(ExactMatrix::zeros(0, 3, 0).is_err());
        assert!(ExactMatrix::from_rows::<[i64; 0]>(&[], 0).is_err());
    }

    #[test]
    fn rank_mod_p_examples() {
        assert_eq!(m(&[&[2, 1], &[0, 2]], 0).rank_mod_p(2).unwrap(), 1);
        assert_eq!(ExactMatrix::identity(5, 0).unwrap().rank_mod_p(7).unwrap(), 5);
        assert_eq!(ExactMatrix::zeros(3, 3, 0).unwrap().rank_mod_p(3).unwrap(), 0);
        assert_eq!(m(&[&[1]], 0).rank_mod_p(6), Err(Error::NotPrime(6)));
    }

    #[test]
    fn alternating_examples() {
        assert!(ExactMatrix::zeros(3, 3, 0).unwrap().is_alternating());
        assert!(m(&[&[0, 1], &[-1, 0]], 0).is_alternating());
        assert!(m(&[&[0, 1], &[1, 0]], 2).is_alternating());
        assert!(!m(&[&[0, 1], &[1, 0]], 0).is_alternating());
        assert!(!m(&[&[1, 0], &[0, 0]], 2).is_alternating());
        assert!(!m(&[&[0, 1, 0]], 0).is_alternating());
    }

    #[test]
    fn content_examples() {
        assert_eq!(m(&[&[0, 2], &[-2, 0]], 0).content(), BigInt::from(2));
        assert_eq!(ExactMatrix::zeros(2, 2, 6).unwrap().content(), BigInt::from(6));
        assert_eq!(m(&[&[0, 3], &[3, 0]], 6).content(), BigInt::from(3));
        assert_eq!(ExactMatrix::zeros(2, 2, 0).unwrap().content(), BigInt::from(0));
    }

    #[test]
    fn min_generators_examples() {
        assert_eq!(ExactMatrix::identity(4, 0).unwrap().min_generators_cokernel().unwrap(), 0);
        assert_eq!(ExactMatrix::zeros(3, 3, 5).unwrap().min_generators_cokernel().unwrap(), 3);
        let d = ExactMatrix::diagonal(&[1, 2, 4], 8).unwrap();
        assert_eq!(d.min_generators_cokernel().unwrap(), 2);
    }

    #[test]
    fn json_roundtrip() {
        let x = m(&[&[0, 1], &[3, 2]], 4);
        let text = serde_json::to_string(&x.to_json().unwrap()).unwrap();
        assert_eq!(text, r#"{"modulus":4,"rows":[[0,1],[3,2]]}"#);
        let back: MatrixJson = serde_json::from_str(&text).unwrap();
        assert_eq!(ExactMatrix::from_json(&back).unwrap(), x);
    }

    #[test]
    fn products() {
        let a = m(&[&[1, 2], &[3, 4]], 0);
        let b = m(&[&[0, 1], &[1, 0]], 0);
        assert_eq!(a.mul(&b).unwrap(), m(&[&[2, 1], &[4, 3]], 0));
        assert!(a.mul(&b.reduce_mod(5).unwrap()).is_err());
        assert_eq!(a.sub(&a).unwrap(), ExactMatrix::zeros(2, 2, 0).unwrap());
    }
}
