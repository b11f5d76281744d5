//! Machine-word matrices over `Z/aZ` for the inner loops.

use num_integer::Integer;

/// Row-major matrix over `Z/aZ` with `a < 2^32`, entries in `[0, a)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct ModMat {
    pub rows: usize,
    pub cols: usize,
    pub modulus: u64,
    pub data: Vec<u64>,
}

impl ModMat {
    pub fn zeros(rows: usize, cols: usize, modulus: u64) -> Self {
        Self {
            rows,
            cols,
            modulus,
            data: vec![0; rows * cols],
        }
    }

    #[cfg(test)]
    pub fn identity(n: usize, modulus: u64) -> Self {
        let mut m = Self::zeros(n, n, modulus);
        for i in 0..n {
            m.data[i * n + i] = 1 % modulus;
        }
        m
    }

    pub fn from_data(rows: usize, cols: usize, modulus: u64, data: Vec<u64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        let data = data.into_iter().map(|x| x % modulus).collect();
        Self {
            rows,
            cols,
            modulus,
            data,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: u64) {
        self.data[i * self.cols + j] = x % self.modulus;
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows, self.modulus);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.cols, other.rows);
        let a = self.modulus;
        let mut out = Self::zeros(self.rows, other.cols, a);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let x = self.get(i, k);
                if x == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let idx = i * other.cols + j;
                    out.data[idx] = (out.data[idx] + x * other.get(k, j)) % a;
                }
            }
        }
        out
    }

    /// Inverse over `Z/aZ`, or `None` if the determinant is not a unit.
    pub fn inverse(&self) -> Option<Self> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let a = self.modulus as i128;
        if a == 1 {
            return Some(Self::zeros(n, n, 1));
        }
        // Euclidean row reduction on [M | I]; only row operations, so the
        // right half tracks the transform.
        let w = 2 * n;
        let mut m: Vec<i128> = vec![0; n * w];
        for i in 0..n {
            for j in 0..n {
                m[i * w + j] = self.get(i, j) as i128;
            }
            m[i * w + n + i] = 1;
        }
        let reduce = |x: i128| x.rem_euclid(a);
        for c in 0..n {
            // gcd the column below c into row c
            loop {
                let nz: Vec<usize> = (c..n).filter(|&r| m[r * w + c] != 0).collect();
                if nz.is_empty() {
                    return None;
                }
                let piv = *nz.iter().min_by_key(|&&r| m[r * w + c]).unwrap();
                if piv != c {
                    for j in 0..w {
                        m.swap(c * w + j, piv * w + j);
                    }
                }
                let p = m[c * w + c];
                let mut done = true;
                for r in c + 1..n {
                    let x = m[r * w + c];
                    if x != 0 {
                        let q = x / p;
                        for j in 0..w {
                            m[r * w + j] = reduce(m[r * w + j] - q * m[c * w + j]);
                        }
                        if m[r * w + c] != 0 {
                            done = false;
                        }
                    }
                }
                if done {
                    break;
                }
            }
            let p = m[c * w + c];
            let inv = mod_inverse(p as u64, a as u64)? as i128;
            for j in 0..w {
                m[c * w + j] = reduce(m[c * w + j] * inv);
            }
            for r in 0..n {
                if r != c {
                    let x = m[r * w + c];
                    if x != 0 {
                        for j in 0..w {
                            m[r * w + j] = reduce(m[r * w + j] - x * m[c * w + j]);
                        }
                    }
                }
            }
        }
        let mut out = Self::zeros(n, n, self.modulus);
        for i in 0..n {
            for j in 0..n {
                out.data[i * n + j] = m[i * w + n + j] as u64;
            }
        }
        Some(out)
    }
}

/// Inverse of `x` mod `a`, if it exists.
pub(crate) fn mod_inverse(x: u64, a: u64) -> Option<u64> {
    let e = (x as i128).extended_gcd(&(a as i128));
    if e.gcd != 1 {
        return None;
    }
    Some(e.x.rem_euclid(a as i128) as u64)
}

/// Rank over `F_p` of a row-major matrix with entries in `[0, p)`.
pub(crate) fn rank_mod_prime(rows: usize, cols: usize, mut data: Vec<u64>, p: u64) -> usize {
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..rows).find(|&r| data[r * cols + c] % p != 0) else {
            continue;
        };
        for j in 0..cols {
            data.swap(rank * cols + j, piv * cols + j);
        }
        let inv = mod_inverse(data[rank * cols + c] % p, p).expect("p is prime");
        for j in 0..cols {
            data[rank * cols + j] = data[rank * cols + j] % p * inv % p;
        }
        for r in 0..rows {
            if r == rank {
                continue;
            }
            let x = data[r * cols + c] % p;
            if x != 0 {
                for j in 0..cols {
                    let y = data[rank * cols + j];
                    data[r * cols + j] = (data[r * cols + j] % p + p * p - x * y) % p;
                }
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// Reduced row-echelon basis of the row space over `F_p`.
pub(crate) fn row_space_basis(rows: usize, cols: usize, mut data: Vec<u64>, p: u64) -> Vec<Vec<u64>> {
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..rows).find(|&r| data[r * cols + c] % p != 0) else {
            continue;
        };
        for j in 0..cols {
            data.swap(rank * cols + j, piv * cols + j);
        }
        let inv = mod_inverse(data[rank * cols + c] % p, p).expect("p is prime");
        for j in 0..cols {
            data[rank * cols + j] = data[rank * cols + j] % p * inv % p;
        }
        for r in 0..rows {
            if r == rank {
                continue;
            }
            let x = data[r * cols + c] % p;
            if x != 0 {
                for j in 0..cols {
                    let y = data[rank * cols + j];
                    data[r * cols + j] = (data[r * cols + j] % p + p * p - x * y) % p;
                }
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    (0..rank).map(|r| data[r * cols..(r + 1) * cols].to_vec()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_mod_composite() {
        let m = ModMat::from_data(2, 2, 4, vec![1, 2, 0, 3]);
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv), ModMat::identity(2, 4));
        assert!(ModMat::from_data(2, 2, 4, vec![2, 0, 0, 1]).inverse().is_none());
        let m = ModMat::from_data(3, 3, 6, vec![2, 3, 0, 3, 2, 1, 0, 1, 5]);
        if let Some(inv) = m.inverse() {
            assert_eq!(inv.mul(&m), ModMat::identity(3, 6));
        }
    }

    #[test]
    fn inverse_needs_gcd_steps() {
        // det = 2*5 - 3*3 = 1, no single entry is a unit mod 12 in column 0
        let m = ModMat::from_data(2, 2, 12, vec![2, 3, 3, 5]);
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv), ModMat::identity(2, 12));
    }

    #[test]
    fn ranks() {
        assert_eq!(rank_mod_prime(2, 2, vec![1, 1, 1, 1], 2), 1);
        assert_eq!(rank_mod_prime(2, 3, vec![1, 2, 0, 2, 1, 1], 3), 2);
        assert_eq!(row_space_basis(2, 2, vec![1, 1, 1, 1], 2), vec![vec![1, 1]]);
    }
}
