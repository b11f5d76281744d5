//! Finitely generated abelian groups in invariant-factor form, and the
//! Hom/Sur/Aut counts that every moment formula is built from.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on `|H|` for subgroup enumeration.
pub const SUBGROUP_ORDER_BOUND: u64 = 10_000;

/// `Z^free_rank ⊕ Z/d_1 ⊕ … ⊕ Z/d_r` with `1 < d_1 | d_2 | … | d_r`.
///
/// The representation is canonical, so derived equality is isomorphism.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FiniteAbelianGroup {
    divisors: Vec<BigUint>,
    free_rank: usize,
}

impl FiniteAbelianGroup {
    pub fn trivial() -> Self {
        Self {
            divisors: Vec::new(),
            free_rank: 0,
        }
    }

    pub fn cyclic(d: u64) -> Self {
        Self::from_factors([d], 0)
    }

    /// `Z^rank`.
    pub fn free(rank: usize) -> Self {
        Self {
            divisors: Vec::new(),
            free_rank: rank,
        }
    }

    /// Canonicalizes an arbitrary multiset of cyclic orders. A factor 0 is
    /// read as a copy of `Z`, a factor 1 is dropped.
    pub fn from_factors<I, T>(factors: I, free_rank: usize) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<BigUint>,
    {
        let mut free_rank = free_rank;
        let mut ds: Vec<BigUint> = Vec::new();
        for f in factors {
            let f: BigUint = f.into();
            if f.is_zero() {
                free_rank += 1;
            } else if !f.is_one() {
                ds.push(f);
            }
        }
        // Z/x ⊕ Z/y ≅ Z/gcd ⊕ Z/lcm; sweeping every pair leaves a chain.
        for i in 0..ds.len() {
            for j in i + 1..ds.len() {
                let g = ds[i].gcd(&ds[j]);
                let l = &ds[i] / &g * &ds[j];
                ds[i] = g;
                ds[j] = l;
            }
        }
        ds.retain(|d| !d.is_one());
        Self {
            divisors: ds,
            free_rank,
        }
    }

    /// Builds a group from a list that is already a divisibility chain
    /// (possibly with leading ones and trailing zeros, as an SNF diagonal).
    pub fn from_chain(diagonal: &[BigUint]) -> Result<Self> {
        let mut divisors = Vec::new();
        let mut free_rank = 0;
        for d in diagonal {
            if d.is_zero() {
                free_rank += 1;
            } else if !d.is_one() {
                if free_rank > 0 {
                    return Err(Error::InvalidArgument(
                        "zero entries must trail in an invariant-factor chain".into(),
                    ));
                }
                if let Some(prev) = divisors.last() {
                    if !(d % prev as &BigUint).is_zero() {
                        return Err(Error::InvalidArgument(format!(
                            "{prev} does not divide {d}"
                        )));
                    }
                }
                divisors.push(d.clone());
            }
        }
        Ok(Self {
            divisors,
            free_rank,
        })
    }

    /// Builds a group from its primary decomposition: prime → exponents.
    pub fn from_primary(parts: &BTreeMap<u64, Vec<u32>>) -> Self {
        let len = parts.values().map(Vec::len).max().unwrap_or(0);
        let mut ds = vec![BigUint::one(); len];
        for (&p, exps) in parts {
            let mut exps = exps.clone();
            exps.sort_unstable_by(|a, b| b.cmp(a));
            for (slot, e) in exps.into_iter().enumerate() {
                // largest powers go to the largest invariant factor
                ds[len - 1 - slot] *= BigUint::from(p).pow(e);
            }
        }
        Self::from_factors(ds, 0)
    }

    pub fn divisors(&self) -> &[BigUint] {
        &self.divisors
    }

    pub fn free_rank(&self) -> usize {
        self.free_rank
    }

    pub fn is_finite(&self) -> bool {
        self.free_rank == 0
    }

    pub fn is_trivial(&self) -> bool {
        self.divisors.is_empty() && self.free_rank == 0
    }

    /// Number of cyclic summands in the invariant-factor decomposition,
    /// i.e. the minimal number of generators.
    pub fn num_generators(&self) -> usize {
        self.divisors.len() + self.free_rank
    }

    /// Divisors as machine integers; `None` if any exceeds `u64`.
    pub fn small_divisors(&self) -> Option<Vec<u64>> {
        self.divisors.iter().map(|d| d.to_u64()).collect()
    }

    fn require_finite(&self) -> Result<()> {
        if self.free_rank > 0 {
            Err(Error::InfiniteGroup(self.free_rank))
        } else {
            Ok(())
        }
    }

    pub fn order(&self) -> Result<BigUint> {
        self.require_finite()?;
        Ok(self.divisors.iter().product())
    }

    /// Largest invariant factor; 1 for the trivial group.
    pub fn exponent(&self) -> Result<BigUint> {
        self.require_finite()?;
        Ok(self.divisors.last().cloned().unwrap_or_else(BigUint::one))
    }

    /// `|∧²G| = ∏_{i<j} gcd(d_i, d_j) = ∏_i d_i^{r-i}`.
    pub fn exterior_square_order(&self) -> Result<BigUint> {
        self.require_finite()?;
        let r = self.divisors.len();
        Ok(self
            .divisors
            .iter()
            .enumerate()
            .map(|(i, d)| d.pow((r - 1 - i) as u32))
            .product())
    }

    /// `G[h]`, the elements of order dividing `h`. The free part has no
    /// torsion and contributes nothing.
    pub fn torsion_of_order_dividing(&self, h: u64) -> Self {
        let h = BigUint::from(h);
        Self::from_factors(self.divisors.iter().map(|d| d.gcd(&h)), 0)
    }

    pub fn sylow(&self, p: u64) -> Result<Self> {
        self.require_finite()?;
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        let p = BigUint::from(p);
        let parts = self.divisors.iter().map(|d| {
            let mut d = d.clone();
            let mut part = BigUint::one();
            while (&d % &p).is_zero() {
                d /= &p;
                part *= &p;
            }
            part
        });
        Ok(Self::from_factors(parts, 0))
    }

    /// `G ⊗ Z/a`.
    pub fn tensor_mod(&self, a: u64) -> Self {
        let a_big = BigUint::from(a);
        let torsion = self.divisors.iter().map(|d| d.gcd(&a_big));
        let free = std::iter::repeat(a_big.clone()).take(self.free_rank);
        Self::from_factors(torsion.chain(free).collect::<Vec<_>>(), 0)
    }

    /// Whether every invariant factor is a power of `p`.
    pub fn is_p_group(&self, p: u64) -> bool {
        if self.free_rank > 0 {
            return false;
        }
        let p = BigUint::from(p);
        self.divisors.iter().all(|d| {
            let mut d = d.clone();
            while (&d % &p).is_zero() {
                d /= &p;
            }
            d.is_one()
        })
    }

    /// Exponents of the cyclic factors of a p-group, ascending.
    pub fn p_exponents(&self, p: u64) -> Result<Vec<u32>> {
        if !self.is_p_group(p) {
            return Err(Error::NotPGroup(p));
        }
        let p = BigUint::from(p);
        Ok(self
            .divisors
            .iter()
            .map(|d| {
                let mut d = d.clone();
                let mut e = 0;
                while d > BigUint::one() {
                    d /= &p;
                    e += 1;
                }
                e
            })
            .collect())
    }

    /// `|Aut(G)|`, as a product over Sylow subgroups of the p-group count
    /// `∏_k (p^{d_k} - p^{k-1}) ∏_j p^{e_j (r-d_j)} ∏_i p^{(e_i-1)(r-c_i+1)}`
    /// where for ascending exponents `e`, `d_k = max{l : e_l = e_k}` and
    /// `c_k = min{l : e_l = e_k}`.
    pub fn aut_order(&self) -> Result<BigUint> {
        self.require_finite()?;
        let exponent = self.exponent()?;
        let exponent = exponent.to_u64().ok_or_else(|| Error::BoundExceeded {
            what: "factoring the exponent",
            needed: exponent.to_string(),
            limit: u64::MAX.to_string(),
        })?;
        let mut total = BigUint::one();
        for p in prime_factors(exponent) {
            let e = self.sylow(p)?.p_exponents(p)?;
            total *= p_group_aut_order(p, &e);
        }
        Ok(total)
    }
}

fn p_group_aut_order(p: u64, e: &[u32]) -> BigUint {
    let r = e.len();
    let pb = BigUint::from(p);
    let pw = |k: usize| pb.pow(k as u32);
    let mut total = BigUint::one();
    for k in 0..r {
        let d = (0..r).filter(|&l| e[l] == e[k]).max().unwrap() + 1;
        let c = (0..r).filter(|&l| e[l] == e[k]).min().unwrap() + 1;
        total *= pw(d) - pw(k);
        total *= pw(e[k] as usize * (r - d));
        total *= pw((e[k] as usize - 1) * (r - c + 1));
    }
    total
}

impl fmt::Display for FiniteAbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.divisors.is_empty() {
            write!(f, "1")?;
        } else {
            let parts: Vec<String> = self.divisors.iter().map(|d| d.to_string()).collect();
            write!(f, "{}", parts.join(","))?;
        }
        if self.free_rank > 0 {
            write!(f, ";free={}", self.free_rank)?;
        }
        Ok(())
    }
}

impl FromStr for FiniteAbelianGroup {
    type Err = Error;

    /// Parses `"2,4"`, `"2,4;free=1"`, `"1"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (torsion, free) = match s.split_once(';') {
            Some((t, rest)) => {
                let rest = rest.trim();
                let v = rest
                    .strip_prefix("free=")
                    .ok_or_else(|| Error::Parse(format!("expected free=<rank>, got {rest:?}")))?;
                let rank = v
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("free rank {v:?}: {e}")))?;
                (t, rank)
            }
            None => (s, 0),
        };
        let mut factors = Vec::new();
        for part in torsion.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let d = part
                .parse::<BigUint>()
                .map_err(|e| Error::Parse(format!("divisor {part:?}: {e}")))?;
            if d.is_zero() {
                return Err(Error::Parse("divisors must be positive".into()));
            }
            factors.push(d);
        }
        Ok(Self::from_factors(factors, free))
    }
}

impl TryFrom<String> for FiniteAbelianGroup {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FiniteAbelianGroup> for String {
    fn from(g: FiniteAbelianGroup) -> String {
        g.to_string()
    }
}

/// `#Hom(G, H) = |H|^{free_rank(G)} ∏_{i,j} gcd(d_i, e_j)`.
pub fn count_hom(g: &FiniteAbelianGroup, h: &FiniteAbelianGroup) -> Result<BigUint> {
    h.require_finite()?;
    let mut total = h.order()?.pow(g.free_rank as u32);
    for d in &g.divisors {
        for e in &h.divisors {
            total *= d.gcd(e);
        }
    }
    Ok(total)
}

/// A subgroup of a concrete finite group `∏ Z/e_i`, stored as a sorted list
/// of element indices (mixed radix, first coordinate least significant).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subgroup {
    pub elements: Vec<u32>,
    pub iso_type: FiniteAbelianGroup,
}

impl Subgroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }
}

/// Arithmetic on the elements of `Z/e_1 × … × Z/e_r` by index.
#[derive(Clone, Debug)]
pub(crate) struct ElementTable {
    moduli: Vec<u64>,
    order: usize,
}

impl ElementTable {
    pub(crate) fn new(moduli: Vec<u64>) -> Self {
        let order = moduli.iter().product::<u64>() as usize;
        Self { moduli, order }
    }

    pub(crate) fn order(&self) -> usize {
        self.order
    }

    pub(crate) fn coords(&self, mut x: usize) -> Vec<u64> {
        self.moduli
            .iter()
            .map(|&m| {
                let c = x as u64 % m;
                x /= m as usize;
                c
            })
            .collect()
    }

    pub(crate) fn index(&self, coords: &[u64]) -> usize {
        let mut idx = 0usize;
        for (c, m) in coords.iter().zip(&self.moduli).rev() {
            idx = idx * *m as usize + (*c % *m) as usize;
        }
        idx
    }

    pub(crate) fn add(&self, x: usize, y: usize) -> usize {
        let mut idx = 0usize;
        let mut scale = 1usize;
        let (mut x, mut y) = (x, y);
        for &m in &self.moduli {
            let m = m as usize;
            idx += ((x % m + y % m) % m) * scale;
            scale *= m;
            x /= m;
            y /= m;
        }
        idx
    }

    pub(crate) fn element_order(&self, x: usize) -> u64 {
        self.coords(x)
            .iter()
            .zip(&self.moduli)
            .fold(1u64, |acc, (&c, &m)| acc.lcm(&(m / c.gcd(&m))))
    }

    /// Isomorphism type of the subgroup with the given elements, read off
    /// from the counts of elements whose order divides each prime power.
    pub(crate) fn iso_type(&self, elements: &[u32]) -> FiniteAbelianGroup {
        let orders: Vec<u64> = elements
            .iter()
            .map(|&x| self.element_order(x as usize))
            .collect();
        let n = elements.len() as u64;
        let mut parts = BTreeMap::new();
        for p in prime_factors(n) {
            let mut counts = vec![1u64];
            let mut pk = 1u64;
            loop {
                pk *= p;
                let c = orders.iter().filter(|&&o| pk % o == 0).count() as u64;
                let stalled = c == *counts.last().unwrap();
                counts.push(c);
                if stalled || pk > n {
                    break;
                }
            }
            let ranks: Vec<u32> = counts.iter().map(|&c| ilog(c, p)).collect();
            // number of cyclic factors of order >= p^k is ranks[k] - ranks[k-1]
            let mut exps = Vec::new();
            for k in 1..ranks.len() {
                let at_least_k = ranks[k] - ranks[k - 1];
                let at_least_next = if k + 1 < ranks.len() {
                    ranks[k + 1] - ranks[k]
                } else {
                    0
                };
                for _ in 0..(at_least_k - at_least_next) {
                    exps.push(k as u32);
                }
            }
            parts.insert(p, exps);
        }
        FiniteAbelianGroup::from_primary(&parts)
    }
}

fn ilog(mut x: u64, p: u64) -> u32 {
    let mut e = 0;
    while x > 1 {
        x /= p;
        e += 1;
    }
    e
}

/// All subgroups of the finite group `h`, each exactly once, as element
/// sets in the concrete model `∏ Z/e_i` together with their isomorphism
/// types. Subgroups are found by closing generated subgroups under
/// adjoining one more element.
pub fn enumerate_subgroups(h: &FiniteAbelianGroup) -> Result<Vec<Subgroup>> {
    enumerate_subgroups_bounded(h, SUBGROUP_ORDER_BOUND)
}

pub fn enumerate_subgroups_bounded(h: &FiniteAbelianGroup, bound: u64) -> Result<Vec<Subgroup>> {
    h.require_finite()?;
    let order = h.order()?;
    if order > BigUint::from(bound) {
        return Err(Error::BoundExceeded {
            what: "subgroup enumeration",
            needed: order.to_string(),
            limit: bound.to_string(),
        });
    }
    let table = ElementTable::new(h.small_divisors().expect("bounded order"));
    let n = table.order();

    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    let mut queue = VecDeque::new();
    let trivial = vec![0u32];
    seen.insert(trivial.clone());
    queue.push_back(trivial);
    let mut out = Vec::new();
    while let Some(sub) = queue.pop_front() {
        let mut member = vec![false; n];
        for &x in &sub {
            member[x as usize] = true;
        }
        for g in 0..n {
            if member[g] {
                continue;
            }
            let bigger = join_cyclic(&table, &sub, g);
            if seen.insert(bigger.clone()) {
                queue.push_back(bigger);
            }
        }
        let iso_type = table.iso_type(&sub);
        out.push(Subgroup {
            elements: sub,
            iso_type,
        });
    }
    Ok(out)
}

/// `S + <g>`.
fn join_cyclic(table: &ElementTable, sub: &[u32], g: usize) -> Vec<u32> {
    let mut multiples = vec![0usize];
    let mut x = g;
    while x != 0 {
        multiples.push(x);
        x = table.add(x, g);
    }
    let mut member = vec![false; table.order()];
    let mut out = Vec::with_capacity(sub.len() * multiples.len());
    for &s in sub {
        for &m in &multiples {
            let y = table.add(s as usize, m);
            if !member[y] {
                member[y] = true;
                out.push(y as u32);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Memoized `#Sur(G, ·)` for a fixed source group, via
/// `#Sur(G,H) = #Hom(G,H) - Σ_{K<H} #Sur(G,K)`.
#[derive(Debug, Clone)]
pub struct SurCounter {
    source: FiniteAbelianGroup,
    bound: u64,
    sur: HashMap<FiniteAbelianGroup, BigUint>,
}

/// Proper subgroups of a group, grouped by isomorphism type.
fn proper_subgroup_census(
    h: &FiniteAbelianGroup,
    bound: u64,
) -> Result<Vec<(FiniteAbelianGroup, u64)>> {
    let order = h.order()?;
    let mut census: BTreeMap<FiniteAbelianGroup, u64> = BTreeMap::new();
    for sub in enumerate_subgroups_bounded(h, bound)? {
        if BigUint::from(sub.order()) != order {
            *census.entry(sub.iso_type).or_default() += 1;
        }
    }
    Ok(census.into_iter().collect())
}

thread_local! {
    static CENSUS_CACHE: std::cell::RefCell<HashMap<(FiniteAbelianGroup, u64), Vec<(FiniteAbelianGroup, u64)>>> =
        std::cell::RefCell::new(HashMap::new());
}

fn cached_census(h: &FiniteAbelianGroup, bound: u64) -> Result<Vec<(FiniteAbelianGroup, u64)>> {
    let key = (h.clone(), bound);
    if let Some(c) = CENSUS_CACHE.with(|c| c.borrow().get(&key).cloned()) {
        return Ok(c);
    }
    let census = proper_subgroup_census(h, bound)?;
    CENSUS_CACHE.with(|c| c.borrow_mut().insert(key, census.clone()));
    Ok(census)
}

impl SurCounter {
    pub fn new(source: FiniteAbelianGroup) -> Self {
        Self::with_bound(source, SUBGROUP_ORDER_BOUND)
    }

    pub fn with_bound(source: FiniteAbelianGroup, bound: u64) -> Self {
        Self {
            source,
            bound,
            sur: HashMap::new(),
        }
    }

    pub fn count(&mut self, target: &FiniteAbelianGroup) -> Result<BigUint> {
        if let Some(v) = self.sur.get(target) {
            return Ok(v.clone());
        }
        let hom = count_hom(&self.source, target)?;
        // A surjection needs at least as many generators upstairs.
        let value = if target.num_generators() > self.source.num_generators() {
            BigUint::zero()
        } else {
            let mut value = hom;
            for (k, mult) in cached_census(target, self.bound)? {
                let s = self.count(&k)?;
                value -= s * mult;
            }
            value
        };
        self.sur.insert(target.clone(), value.clone());
        Ok(value)
    }
}

pub fn count_sur(g: &FiniteAbelianGroup, h: &FiniteAbelianGroup) -> Result<BigUint> {
    h.require_finite()?;
    SurCounter::new(g.clone()).count(h)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Distinct prime factors, ascending.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// All partitions of `m` as non-increasing part lists, in lexicographic
/// order (largest first part first).
pub fn partitions(m: u32) -> Vec<Vec<u32>> {
    fn go(rem: u32, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if rem == 0 {
            out.push(cur.clone());
            return;
        }
        for part in (1..=rem.min(max)).rev() {
            cur.push(part);
            go(rem - part, part, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(m, m, &mut Vec::new(), &mut out);
    out
}

/// All abelian p-groups of order `p^m`.
pub fn p_groups_of_order(p: u64, m: u32) -> Vec<FiniteAbelianGroup> {
    partitions(m)
        .into_iter()
        .map(|parts| FiniteAbelianGroup::from_factors(parts.iter().map(|&e| p.pow(e)), 0))
        .collect()
}

/// All finite abelian groups with exponent dividing `a` and order at most
/// `max_order`.
pub fn groups_with_exponent_dividing(a: u64, max_order: u64) -> Vec<FiniteAbelianGroup> {
    let mut out = vec![FiniteAbelianGroup::trivial()];
    let divs: Vec<u64> = (2..=a).filter(|d| a % d == 0).collect();
    // chains d_1 | d_2 | ... | d_r of divisors of a, with product bounded
    fn extend(
        chain: &mut Vec<u64>,
        product: u64,
        divs: &[u64],
        max_order: u64,
        out: &mut Vec<FiniteAbelianGroup>,
    ) {
        for &d in divs {
            if let Some(&last) = chain.last() {
                if d % last != 0 {
                    continue;
                }
            }
            let next = product * d;
            if next > max_order {
                continue;
            }
            chain.push(d);
            out.push(FiniteAbelianGroup::from_factors(chain.iter().copied(), 0));
            extend(chain, next, divs, max_order, out);
            chain.pop();
        }
    }
    extend(&mut Vec::new(), 1, &divs, max_order, &mut out);
    out.sort();
    out
}
