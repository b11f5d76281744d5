//! Isotropy of maps `F: (Z/aZ)^n -> G` for alternating forms `C`.
//!
//! `F` is isotropic for `C` when some `M` with `M - M^T = C` satisfies
//! `F∘M = 0`. For surjective `F` this is equivalent to a finite list of
//! congruences on `F C F^T`, which is what the fast checks evaluate; the
//! exhaustive search over `M` is kept as an oracle for small cases.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{prime_factors, FiniteAbelianGroup};
use crate::linalg::small::{row_space_basis, ModMat};
use crate::linalg::{column_span_index, ExactMatrix};
use crate::rng::SeedSpec;
use crate::stats::{tally_trials, MomentEstimate};

/// Largest number of maps (or partial maps) enumerated by the exact
/// isotropy probability.
pub const EXACT_ENUMERATION_BOUND: u64 = 1 << 24;

/// Largest number of coordinate subsets visited by code and depth checks.
pub const SUBSET_ENUMERATION_BOUND: u64 = 1 << 20;

/// A homomorphism `(Z/aZ)^n -> G`, written against the invariant factors
/// `e_1 | ... | e_r` of `G` (the nontrivial ones). Row `s` holds the
/// images of the basis vectors in the `s`-th cyclic factor, reduced mod
/// `e_s`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupMap {
    target: FiniteAbelianGroup,
    moduli: Vec<u64>,
    rows: Vec<Vec<u64>>,
    modulus: u64,
    n: usize,
}

impl GroupMap {
    pub fn new(target: FiniteAbelianGroup, rows: Vec<Vec<i64>>, modulus: u64) -> Result<Self> {
        let moduli = target.small_divisors().ok_or_else(|| match target.free_rank() {
            0 => Error::InvalidArgument(format!("invariant factors of {target} exceed 64 bits")),
            f => Error::InfiniteGroup(f),
        })?;
        if modulus == 0 {
            return Err(Error::InvalidArgument("the source ring must be Z/aZ with a >= 1".into()));
        }
        if let Some(&e) = moduli.last() {
            if modulus % e != 0 {
                return Err(Error::InvalidArgument(format!(
                    "exponent {e} of {target} does not divide a = {modulus}"
                )));
            }
        }
        if rows.len() != moduli.len() {
            return Err(Error::Dimension(format!(
                "{} rows for a target with {} invariant factors",
                rows.len(),
                moduli.len()
            )));
        }
        let n = rows.first().map_or(0, Vec::len);
        if n == 0 && !rows.is_empty() {
            return Err(Error::Dimension("a map needs at least one source coordinate".into()));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("ragged map matrix".into()));
        }
        let rows = rows
            .into_iter()
            .zip(&moduli)
            .map(|(row, &e)| row.into_iter().map(|x| x.rem_euclid(e as i64) as u64).collect())
            .collect();
        Ok(Self {
            target,
            moduli,
            rows,
            modulus,
            n,
        })
    }

    /// The zero-dimensional data of a map onto the trivial group from `R^n`.
    pub fn trivial(n: usize, modulus: u64) -> Self {
        Self {
            target: FiniteAbelianGroup::trivial(),
            moduli: vec![],
            rows: vec![],
            modulus,
            n,
        }
    }

    /// A uniformly random map: each basis vector goes to a uniform element.
    pub fn random(target: &FiniteAbelianGroup, n: usize, modulus: u64, seed: &SeedSpec) -> Result<Self> {
        let moduli = target.small_divisors().ok_or(Error::InfiniteGroup(target.free_rank()))?;
        let rows = moduli
            .iter()
            .enumerate()
            .map(|(s, &e)| (0..n).map(|l| seed.below(s, l, 0, e) as i64).collect())
            .collect();
        let mut m = Self::new(target.clone(), rows, modulus)?;
        m.n = n;
        Ok(m)
    }

    pub fn target(&self) -> &FiniteAbelianGroup {
        &self.target
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn source_rank(&self) -> usize {
        self.n
    }

    /// Nontrivial invariant factors `e_1 | ... | e_r`.
    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.rows
    }

    /// Invariant factors padded with leading 1s to `max(n, r)` slots.
    pub fn padded_divisors(&self) -> Vec<u64> {
        let slots = self.n.max(self.moduli.len());
        let mut d = vec![1; slots - self.moduli.len()];
        d.extend_from_slice(&self.moduli);
        d
    }

    fn offset(&self) -> usize {
        self.n.saturating_sub(self.moduli.len())
    }

    /// Image of the `l`-th basis vector.
    pub fn column(&self, l: usize) -> Vec<u64> {
        self.rows.iter().map(|r| r[l]).collect()
    }

    /// Index of the image, `[G : F(R^n)]`, using only the columns in `keep`.
    fn image_index(&self, keep: impl Iterator<Item = usize>) -> BigUint {
        let cols: Vec<Vec<u64>> = keep.map(|l| self.column(l)).collect();
        column_span_index(&self.moduli, &cols)
    }

    pub fn is_surjective(&self) -> bool {
        self.image_index(0..self.n).is_one()
    }

    /// `F∘M` for an `n x m` matrix `M` over the source ring, as one
    /// element of `G` per column.
    pub fn apply(&self, m: &ExactMatrix) -> Result<Vec<Vec<u64>>> {
        if m.rows() != self.n || m.modulus() != self.modulus {
            return Err(Error::Dimension(format!(
                "cannot apply a map from (Z/{})^{} to a {}x{} matrix over Z/{}",
                self.modulus,
                self.n,
                m.rows(),
                m.cols(),
                m.modulus()
            )));
        }
        let m = to_small(m);
        Ok((0..m.cols)
            .map(|j| {
                self.rows
                    .iter()
                    .zip(&self.moduli)
                    .map(|(row, &e)| {
                        let mut acc = 0u128;
                        for (l, &f) in row.iter().enumerate() {
                            acc += f as u128 * m.get(l, j) as u128;
                        }
                        (acc % e as u128) as u64
                    })
                    .collect()
            })
            .collect())
    }

    pub fn to_exact(&self) -> Option<ExactMatrix> {
        let rows: Vec<Vec<i64>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&x| x as i64).collect())
            .collect();
        ExactMatrix::from_rows(&rows, 0).ok()
    }
}

fn to_small(m: &ExactMatrix) -> ModMat {
    let a = m.modulus();
    let data = m
        .entries()
        .iter()
        .map(|x| x.to_u64().expect("entries reduced into [0, a)"))
        .collect();
    ModMat::from_data(m.rows(), m.cols(), a.max(1), data)
}

fn check_form(f: &GroupMap, c: &ExactMatrix) -> Result<ModMat> {
    if c.modulus() != f.modulus {
        return Err(Error::Modulus {
            expected: f.modulus,
            found: c.modulus(),
        });
    }
    if c.rows() != f.n || c.cols() != f.n {
        return Err(Error::Dimension(format!(
            "form is {}x{}, map has source rank {}",
            c.rows(),
            c.cols(),
            f.n
        )));
    }
    if !c.is_alternating() {
        return Err(Error::NotAlternating);
    }
    Ok(to_small(c))
}

/// Outcome of an isotropy check. `failing_triple` is `(k, i, j)` in padded
/// slot indices (0-based): the induced form at level `k` pairs the dual
/// generators of slots `i < j` to a nonzero value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsotropyReport {
    pub isotropic: bool,
    pub surjective: bool,
    pub failing_triple: Option<(usize, usize, usize)>,
    #[serde(with = "opt_matrix")]
    pub witness: Option<ExactMatrix>,
}

mod opt_matrix {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::linalg::{ExactMatrix, MatrixJson};

    pub fn serialize<S: Serializer>(m: &Option<ExactMatrix>, s: S) -> Result<S::Ok, S::Error> {
        m.as_ref()
            .map(|m| m.to_json())
            .transpose()
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<ExactMatrix>, D::Error> {
        Option::<MatrixJson>::deserialize(d)?
            .map(|j| ExactMatrix::from_json(&j))
            .transpose()
            .map_err(serde::de::Error::custom)
    }
}

/// `q_st = F_s C F_t^T mod a` for `s < t`, with `rows` the map rows.
fn pairing_matrix(rows: &[Vec<u64>], c: &ModMat) -> Vec<Vec<u64>> {
    let a = c.modulus as u128;
    let n = c.rows;
    let fc: Vec<Vec<u64>> = rows
        .iter()
        .map(|row| {
            (0..n)
                .map(|j| {
                    let mut acc = 0u128;
                    for (l, &f) in row.iter().enumerate() {
                        if f != 0 {
                            acc += f as u128 * c.get(l, j) as u128;
                        }
                    }
                    (acc % a) as u64
                })
                .collect()
        })
        .collect();
    let r = rows.len();
    let mut q = vec![vec![0u64; r]; r];
    for s in 0..r {
        for t in s + 1..r {
            let mut acc = 0u128;
            for l in 0..n {
                acc += fc[s][l] as u128 * rows[t][l] as u128;
            }
            q[s][t] = (acc % a) as u64;
        }
    }
    q
}

/// First failing `(k, s, t)` over the unpadded rows, or `None`.
fn first_violation(moduli: &[u64], q: &[Vec<u64>]) -> Option<(usize, usize, usize)> {
    let r = moduli.len();
    for k in 0..r {
        let d = moduli[k];
        for s in k..r {
            for t in s + 1..r {
                if q[s][t] % d != 0 {
                    return Some((k, s, t));
                }
            }
        }
    }
    None
}

/// Level-form condition: for each slot `k` with `d_k > 1`, the alternating form
/// `F_k C_k F_k^*` vanishes on the dual generators of slots `>= k`.
/// Evaluated verbatim for any homomorphism, surjective or not.
pub fn check_level_forms(f: &GroupMap, c: &ExactMatrix) -> Result<bool> {
    Ok(level_form_violation(f, c)?.is_none())
}

/// The first violated constraint of [`check_level_forms`], in padded slots.
pub fn level_form_violation(f: &GroupMap, c: &ExactMatrix) -> Result<Option<(usize, usize, usize)>> {
    let c = check_form(f, c)?;
    let q = pairing_matrix(&f.rows, &c);
    let off = f.offset();
    Ok(first_violation(&f.moduli, &q).map(|(k, s, t)| (k + off, s + off, t + off)))
}

/// An invertible `W` over `Z/aZ` whose row `i` is congruent to the map
/// row of slot `i` modulo `d_i`, so that `F` becomes coordinate
/// projection in the basis dual to the rows of `W`.
fn smith_basis(f: &GroupMap) -> Result<ModMat> {
    let a = f.modulus;
    let n = f.n;
    let r = f.moduli.len();
    if r > n {
        return Err(Error::NotSurjective);
    }
    let off = n - r;
    let mut w = ModMat::zeros(n, n, a);
    if a == 1 {
        return Ok(w);
    }
    for p in prime_factors(a) {
        let mut q = 1u64;
        while a % (q * p) == 0 {
            q *= p;
        }
        // rows fixed by F where p divides the slot's order
        let mut chosen: Vec<Option<Vec<u64>>> = vec![None; n];
        for s in 0..r {
            if f.moduli[s] % p == 0 {
                chosen[off + s] = Some(f.rows[s].iter().map(|&x| x % q).collect());
            }
        }
        let mut basis: Vec<u64> = chosen
            .iter()
            .flatten()
            .flat_map(|row| row.iter().map(|&x| x % p))
            .collect();
        let fixed = basis.len() / n;
        if crate::linalg::small::rank_mod_prime(fixed, n, basis.clone(), p) < fixed {
            return Err(Error::NotSurjective);
        }
        // complete with standard basis vectors, lowest index first
        let mut next_unit = 0;
        for slot in chosen.iter_mut().filter(|s| s.is_none()) {
            loop {
                let mut candidate = vec![0u64; n];
                candidate[next_unit] = 1;
                next_unit += 1;
                let mut trial = basis.clone();
                trial.extend_from_slice(&candidate);
                let rows = trial.len() / n;
                if crate::linalg::small::rank_mod_prime(rows, n, trial.clone(), p) == rows {
                    basis = trial;
                    *slot = Some(candidate);
                    break;
                }
            }
        }
        // CRT: w ≡ chosen (mod q), w ≡ 0 (mod a/q)
        let cofactor = a / q;
        let lift = (cofactor % q).max(1);
        let inv = crate::linalg::small::mod_inverse(lift, q).unwrap_or(0);
        let e = (cofactor as u128 * inv as u128 % a as u128) as u64;
        for (i, row) in chosen.into_iter().enumerate() {
            for (j, x) in row.expect("filled").into_iter().enumerate() {
                let v = (w.get(i, j) as u128 + x as u128 * e as u128) % a as u128;
                w.set(i, j, v as u64);
            }
        }
    }
    Ok(w)
}

fn require_surjective(f: &GroupMap) -> Result<()> {
    if f.is_surjective() {
        Ok(())
    } else {
        Err(Error::NotSurjective)
    }
}

/// The form in Smith coordinates, `C' = W C W^T`.
fn smith_form(f: &GroupMap, c: &ModMat) -> Result<(ModMat, ModMat)> {
    let w = smith_basis(f)?;
    let cp = w.mul(c).mul(&w.transpose());
    Ok((w, cp))
}

/// Isotropy read in Smith coordinates: with `F` a coordinate
/// projection, `c'_ij ≡ 0 (mod min(d_i, d_j))` for all `i < j`.
pub fn check_smith_isotropy(f: &GroupMap, c: &ExactMatrix) -> Result<bool> {
    let c = check_form(f, c)?;
    require_surjective(f)?;
    let (_, cp) = smith_form(f, &c)?;
    let d = f.padded_divisors();
    let n = f.n;
    Ok((0..n).all(|i| (i + 1..n).all(|j| cp.get(i, j) % d[i].min(d[j]) == 0)))
}

fn verify_witness(f: &GroupMap, c: &ExactMatrix, m: &ExactMatrix) -> Result<bool> {
    let diff = m.sub(&m.transpose())?;
    Ok(&diff == c && f.apply(m)?.iter().all(|col| col.iter().all(|&x| x == 0)))
}

/// A `C`-symmetric `M` with `F∘M = 0`: in Smith coordinates take the
/// strict upper triangle of `C'` (entries on and below the diagonal are
/// zero), then change basis back. Both equations are checked before
/// returning.
pub fn build_witness(f: &GroupMap, c: &ExactMatrix) -> Result<ExactMatrix> {
    let cs = check_form(f, c)?;
    require_surjective(f)?;
    let (w, cp) = smith_form(f, &cs)?;
    let n = f.n;
    let d = f.padded_divisors();
    if (0..n).any(|i| (i + 1..n).any(|j| cp.get(i, j) % d[i].min(d[j]) != 0)) {
        return Err(Error::NoWitness);
    }
    let mut mp = ModMat::zeros(n, n, cp.modulus);
    for i in 0..n {
        for j in i + 1..n {
            mp.set(i, j, cp.get(i, j));
        }
    }
    let u = w.inverse().expect("smith basis is invertible");
    let m = u.mul(&mp).mul(&u.transpose());
    let m = ExactMatrix::new(n, n, f.modulus, m.data.iter().map(|&x| BigInt::from(x)).collect())?;
    if !verify_witness(f, c, &m)? {
        return Err(Error::NoWitness);
    }
    Ok(m)
}

/// Largest `n` and `a` for the exhaustive witness search.
pub const EXHAUSTIVE_MAX_N: usize = 4;
pub const EXHAUSTIVE_MAX_A: u64 = 4;

/// Search every `C`-symmetric `M` for one with `F∘M = 0`. Columns are
/// filled from last to first; the entries of column `j` below the
/// diagonal are forced by the already chosen rows.
pub fn exhaustive_witness(f: &GroupMap, c: &ExactMatrix) -> Result<Option<ExactMatrix>> {
    let cs = check_form(f, c)?;
    let n = f.n;
    let a = f.modulus;
    if n > EXHAUSTIVE_MAX_N || a > EXHAUSTIVE_MAX_A {
        return Err(Error::BoundExceeded {
            what: "exhaustive witness search",
            needed: format!("n = {n}, a = {a}"),
            limit: format!("n <= {EXHAUSTIVE_MAX_N}, a <= {EXHAUSTIVE_MAX_A}"),
        });
    }
    let mut m = ModMat::zeros(n, n, a);
    let found = search_column(f, &cs, &mut m, n);
    Ok(found.then(|| {
        ExactMatrix::new(n, n, a, m.data.iter().map(|&x| BigInt::from(x)).collect()).expect("square")
    }))
}

fn column_in_kernel(f: &GroupMap, m: &ModMat, j: usize) -> bool {
    f.rows.iter().zip(&f.moduli).all(|(row, &e)| {
        let s: u64 = row.iter().enumerate().map(|(l, &x)| x * m.get(l, j)).sum();
        s % e == 0
    })
}

fn search_column(f: &GroupMap, c: &ModMat, m: &mut ModMat, remaining: usize) -> bool {
    if remaining == 0 {
        return true;
    }
    let j = remaining - 1;
    let n = f.n;
    let a = m.modulus;
    // m_ij for i > j is m_ji - c_ji, with m_ji in an already fixed column
    for i in j + 1..n {
        let v = (m.get(j, i) + a - c.get(j, i)) % a;
        m.set(i, j, v);
    }
    let free = j + 1;
    let total = a.pow(free as u32);
    for code in 0..total {
        let mut x = code;
        for i in 0..free {
            m.set(i, j, x % a);
            x /= a;
        }
        if column_in_kernel(f, m, j) && search_column(f, c, m, j) {
            return true;
        }
    }
    false
}

/// Full report: the level-form verdict, and for surjective isotropic
/// maps a verified witness.
pub fn isotropy_report(f: &GroupMap, c: &ExactMatrix) -> Result<IsotropyReport> {
    let failing_triple = level_form_violation(f, c)?;
    let surjective = f.is_surjective();
    let witness = if failing_triple.is_none() && surjective {
        Some(build_witness(f, c)?)
    } else {
        None
    };
    Ok(IsotropyReport {
        isotropic: failing_triple.is_none(),
        surjective,
        failing_triple,
        witness,
    })
}

fn check_target(g: &FiniteAbelianGroup, a: u64) -> Result<Vec<u64>> {
    let e = g.small_divisors().ok_or(Error::InfiniteGroup(g.free_rank()))?;
    if let Some(&last) = e.last() {
        if a % last != 0 {
            return Err(Error::InvalidArgument(format!(
                "exponent of {g} does not divide a = {a}"
            )));
        }
    }
    Ok(e)
}

/// Exact probability that a uniform `F: (Z/aZ)^n -> G` satisfies
/// the level-form condition. All rows but the last are enumerated; for each, the
/// admissible last rows form the kernel of a linear map and are counted
/// from the index of its image.
pub fn isotropy_probability_exact(c: &ExactMatrix, g: &FiniteAbelianGroup, a: u64) -> Result<BigRational> {
    if c.modulus() != a {
        return Err(Error::Modulus {
            expected: a,
            found: c.modulus(),
        });
    }
    if !c.is_square() {
        return Err(Error::Dimension("form must be square".into()));
    }
    if !c.is_alternating() {
        return Err(Error::NotAlternating);
    }
    let e = check_target(g, a)?;
    let n = c.rows();
    let r = e.len();
    if r <= 1 {
        return Ok(BigRational::one());
    }
    let head = &e[..r - 1];
    let last = e[r - 1];
    let mut work = 1u64;
    for &x in head {
        for _ in 0..n {
            work = work.saturating_mul(x);
        }
    }
    if work > EXACT_ENUMERATION_BOUND {
        return Err(Error::BoundExceeded {
            what: "exact isotropy enumeration",
            needed: work.to_string(),
            limit: EXACT_ENUMERATION_BOUND.to_string(),
        });
    }
    let cs = to_small(c);
    let head_order: u64 = head.iter().product();
    let mut rows: Vec<Vec<u64>> = head.iter().map(|_| vec![0u64; n]).collect();
    let mut admissible = BigUint::zero();
    let mut counter = vec![0u64; (r - 1) * n];
    let last_pow = BigUint::from(last).pow(n as u32);
    loop {
        for s in 0..r - 1 {
            rows[s].copy_from_slice(&counter[s * n..(s + 1) * n]);
        }
        let q = pairing_matrix(&rows, &cs);
        if first_violation(head, &q).is_none() {
            // last row x must satisfy (F_s C) x ≡ 0 mod e_s for every s
            let cols: Vec<Vec<u64>> = (0..n)
                .map(|l| {
                    (0..r - 1)
                        .map(|s| {
                            let mut acc = 0u128;
                            for (k, &f) in rows[s].iter().enumerate() {
                                acc += f as u128 * cs.get(k, l) as u128;
                            }
                            (acc % head[s] as u128) as u64
                        })
                        .collect()
                })
                .collect();
            let index = column_span_index(head, &cols);
            admissible += &last_pow * index / head_order;
        }
        // odometer
        let mut t = 0;
        loop {
            if t == counter.len() {
                let total = BigUint::from(last).pow(n as u32)
                    * head.iter().map(|&x| BigUint::from(x).pow(n as u32)).product::<BigUint>();
                return Ok(BigRational::new(admissible.into(), total.into()));
            }
            counter[t] += 1;
            if counter[t] < head[t / n] {
                break;
            }
            counter[t] = 0;
            t += 1;
        }
    }
}

/// Monte Carlo estimate of the probability that a uniform map satisfies
/// the level-form condition. Trial `t` uses the stream `seed.trial(t)`.
pub fn isotropy_probability_mc(
    c: &ExactMatrix,
    g: &FiniteAbelianGroup,
    a: u64,
    trials: u64,
    seed: SeedSpec,
) -> Result<MomentEstimate> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    if c.modulus() != a {
        return Err(Error::Modulus {
            expected: a,
            found: c.modulus(),
        });
    }
    if !c.is_square() || !c.is_alternating() {
        return Err(Error::NotAlternating);
    }
    let e = check_target(g, a)?;
    let n = c.rows();
    let cs = to_small(c);
    let tally = tally_trials(trials, |t| {
        let s = seed.trial(t);
        let rows: Vec<Vec<u64>> = e
            .iter()
            .enumerate()
            .map(|(i, &m)| (0..n).map(|l| s.below(i, l, 0, m)).collect())
            .collect();
        let q = pairing_matrix(&rows, &cs);
        if first_violation(&e, &q).is_none() {
            1.0
        } else {
            0.0
        }
    });
    Ok(MomentEstimate::from_tally(
        &tally,
        seed,
        g.clone(),
        format!("isotropy(n={n}, a={a})"),
    ))
}

/// For `G = (Z/aZ)^r`, `p | a` and `C` divisible by `b = a/p`: whether the
/// row space of `F mod p` is an isotropic subspace for `(C/b) mod p`.
pub fn finite_field_isotropy(c: &ExactMatrix, f: &GroupMap, p: u64) -> Result<bool> {
    let cs = check_form(f, c)?;
    let a = f.modulus;
    if !crate::group::is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if a % p != 0 {
        return Err(Error::InvalidArgument(format!("{p} does not divide a = {a}")));
    }
    if f.moduli.iter().any(|&e| e != a) {
        return Err(Error::InvalidArgument(format!(
            "target {} is not free over Z/{a}",
            f.target
        )));
    }
    let b = a / p;
    if cs.data.iter().any(|&x| x % b != 0) {
        return Err(Error::InvalidArgument(format!("form is not divisible by {b}")));
    }
    let n = f.n;
    let cbar: Vec<u64> = cs.data.iter().map(|&x| (x / b) % p).collect();
    let data: Vec<u64> = f.rows.iter().flat_map(|r| r.iter().map(|&x| x % p)).collect();
    let basis = row_space_basis(f.rows.len(), n, data, p);
    for (i, v) in basis.iter().enumerate() {
        for w in &basis[i + 1..] {
            let mut acc = 0u64;
            for k in 0..n {
                for l in 0..n {
                    acc = (acc + v[k] * cbar[k * n + l] % p * w[l]) % p;
                }
            }
            if acc != 0 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn subsets_below(n: usize, size_limit: usize) -> u64 {
    // Σ_{s < size_limit} C(n, s)
    let mut total = 0u64;
    let mut binom = 1u64;
    for s in 0..size_limit.min(n + 1) {
        total = total.saturating_add(binom);
        binom = binom.saturating_mul((n - s) as u64) / (s as u64 + 1);
    }
    total
}

fn for_each_subset(n: usize, max_size: usize, mut visit: impl FnMut(&[usize]) -> bool) {
    fn go(start: usize, n: usize, left: usize, cur: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if !visit(cur) {
            return false;
        }
        if left == 0 {
            return true;
        }
        for i in start..n {
            cur.push(i);
            let go_on = go(i + 1, n, left - 1, cur, visit);
            cur.pop();
            if !go_on {
                return false;
            }
        }
        true
    }
    go(0, n, max_size, &mut Vec::new(), &mut visit);
}

/// Whether `F` stays surjective after deleting any fewer than `w`
/// coordinates.
pub fn code_distance_check(f: &GroupMap, w: usize) -> Result<bool> {
    if w == 0 {
        return Err(Error::InvalidArgument("distance must be positive".into()));
    }
    let visits = subsets_below(f.n, w);
    if visits > SUBSET_ENUMERATION_BOUND {
        return Err(Error::BoundExceeded {
            what: "code distance check",
            needed: visits.to_string(),
            limit: SUBSET_ENUMERATION_BOUND.to_string(),
        });
    }
    let mut ok = true;
    for_each_subset(f.n, w - 1, |sigma| {
        if !f.image_index((0..f.n).filter(|l| !sigma.contains(l))).is_one() {
            ok = false;
        }
        ok
    });
    Ok(ok)
}

/// Number of prime factors counted with multiplicity.
fn omega(mut x: u64) -> usize {
    let mut count = 0;
    for p in prime_factors(x) {
        while x % p == 0 {
            x /= p;
            count += 1;
        }
    }
    count
}

/// The `w`-depth: the largest `D = [G : F(R^n_σ)]` over coordinate sets `σ`
/// with `#σ < ℓ(D)·w`, where `ℓ(D)` counts prime factors of `D` with
/// multiplicity and `R^n_σ` is spanned by the coordinates outside `σ`;
/// 1 if there is none.
pub fn w_depth(f: &GroupMap, w: usize) -> Result<u64> {
    if w == 0 {
        return Err(Error::InvalidArgument("w must be positive".into()));
    }
    let order = f
        .target
        .order()?
        .to_u64()
        .ok_or_else(|| Error::InvalidArgument("target too large".into()))?;
    let max_size = omega(order) * w;
    let visits = subsets_below(f.n, max_size);
    if visits > SUBSET_ENUMERATION_BOUND {
        return Err(Error::BoundExceeded {
            what: "depth computation",
            needed: visits.to_string(),
            limit: SUBSET_ENUMERATION_BOUND.to_string(),
        });
    }
    let mut depth = 1u64;
    if max_size == 0 {
        return Ok(depth);
    }
    for_each_subset(f.n, max_size - 1, |sigma| {
        let index = f
            .image_index((0..f.n).filter(|l| !sigma.contains(l)))
            .to_u64()
            .expect("index divides |G|");
        if sigma.len() < omega(index) * w {
            depth = depth.max(index);
        }
        true
    });
    Ok(depth)
}
