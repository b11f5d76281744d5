//! Cohen-Lenstra and sandpile limit distributions and their moments.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{count_sur, is_prime, p_groups_of_order, ElementTable, FiniteAbelianGroup};

/// Default tolerance for truncating infinite products.
pub const DEFAULT_TRUNCATION: f64 = 1e-12;

/// Largest group for which perfect pairings are counted by brute force.
pub const PAIRING_ORDER_BOUND: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitKind {
    CohenLenstra { p: u64, u: u32 },
    Sandpile { p: u64 },
}

/// A limit distribution on finite abelian p-groups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitDistribution {
    pub kind: LimitKind,
    pub truncation: f64,
}

/// A probability together with a rigorous bound on its truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitValue {
    pub value: f64,
    pub tail_bound: f64,
}

impl LimitDistribution {
    pub fn cohen_lenstra(p: u64, u: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(Self {
            kind: LimitKind::CohenLenstra { p, u },
            truncation: DEFAULT_TRUNCATION,
        })
    }

    pub fn sandpile(p: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(Self {
            kind: LimitKind::Sandpile { p },
            truncation: DEFAULT_TRUNCATION,
        })
    }

    pub fn with_truncation(mut self, truncation: f64) -> Self {
        self.truncation = truncation;
        self
    }

    pub fn prime(&self) -> u64 {
        match self.kind {
            LimitKind::CohenLenstra { p, .. } | LimitKind::Sandpile { p } => p,
        }
    }

    pub fn probability(&self, g: &FiniteAbelianGroup) -> Result<LimitValue> {
        match self.kind {
            LimitKind::CohenLenstra { p, u } => cl_probability_with(g, p, u, self.truncation),
            LimitKind::Sandpile { p } => sandpile_probability_with(g, p, self.truncation),
        }
    }

    /// The `H`-moment `E[#Sur(Γ, H)]`.
    pub fn moment(&self, h: &FiniteAbelianGroup) -> Result<BigRational> {
        match self.kind {
            LimitKind::CohenLenstra { u, .. } => cl_moment(h, u),
            LimitKind::Sandpile { .. } => Ok(BigRational::from_integer(sandpile_moment(h)?.into())),
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            LimitKind::CohenLenstra { p, u } => format!("cohen_lenstra(p={p}, u={u})"),
            LimitKind::Sandpile { p } => format!("sandpile(p={p})"),
        }
    }
}

/// `∏_{k >= 1} (1 - p^{-(k·step + shift)})` truncated once the remaining
/// factors change the value by less than `tol`.
fn truncated_product(p: u64, step: i32, shift: i32, tol: f64) -> LimitValue {
    let pf = p as f64;
    let mut value = 1.0;
    let mut k = 1;
    loop {
        let x = pf.powi(-(k * step + shift));
        value *= 1.0 - x;
        // remaining factors have x_j <= x·p^{-step(j-k)} <= 1/2, and
        // |log(1 - x_j)| <= 2 x_j, so the relative tail is below 2·Σ x_j
        let next = x * pf.powi(-step);
        let tail = 2.0 * next / (1.0 - pf.powi(-step));
        let bound = value * (tail.exp() - 1.0);
        if bound < tol {
            return LimitValue {
                value,
                tail_bound: bound,
            };
        }
        k += 1;
    }
}

fn big_to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

/// `Γ_CL^{(p,u)}(G) = ∏_{k>=1}(1 - p^{-k-u}) / (|G|^u |Aut G|)`.
pub fn cl_probability(g: &FiniteAbelianGroup, p: u64, u: u32) -> Result<LimitValue> {
    cl_probability_with(g, p, u, DEFAULT_TRUNCATION)
}

fn cl_probability_with(g: &FiniteAbelianGroup, p: u64, u: u32, tol: f64) -> Result<LimitValue> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if !g.is_p_group(p) {
        return Err(Error::NotPGroup(p));
    }
    let weight = g.order()?.pow(u) * g.aut_order()?;
    let w = big_to_f64(&weight);
    let prod = truncated_product(p, 1, u as i32, tol * w);
    Ok(LimitValue {
        value: prod.value / w,
        tail_bound: prod.tail_bound / w,
    })
}

/// `Γ_sandpile^{(p)}(G) = #{perfect symmetric pairings} / (|G| |Aut G|)
/// · ∏_{k>=1}(1 - p^{1-2k})`.
pub fn sandpile_probability(g: &FiniteAbelianGroup, p: u64) -> Result<LimitValue> {
    sandpile_probability_with(g, p, DEFAULT_TRUNCATION)
}

fn sandpile_probability_with(g: &FiniteAbelianGroup, p: u64, tol: f64) -> Result<LimitValue> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if !g.is_p_group(p) {
        return Err(Error::NotPGroup(p));
    }
    let pairings = count_perfect_symmetric_pairings(g)?;
    let weight = big_to_f64(&(g.order()? * g.aut_order()?)) / big_to_f64(&pairings);
    let prod = truncated_product(p, 2, -1, tol * weight);
    Ok(LimitValue {
        value: prod.value / weight,
        tail_bound: prod.tail_bound / weight,
    })
}

fn pairing_cache() -> &'static Mutex<HashMap<FiniteAbelianGroup, BigUint>> {
    static CACHE: OnceLock<Mutex<HashMap<FiniteAbelianGroup, BigUint>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Number of symmetric bilinear `G × G → Q/Z` inducing `G ≅ Hom(G, Q/Z)`,
/// by enumerating every symmetric Gram matrix.
pub fn count_perfect_symmetric_pairings(g: &FiniteAbelianGroup) -> Result<BigUint> {
    let order = g.order()?;
    if order > BigUint::from(PAIRING_ORDER_BOUND) {
        return Err(Error::BoundExceeded {
            what: "pairing enumeration",
            needed: order.to_string(),
            limit: PAIRING_ORDER_BOUND.to_string(),
        });
    }
    if let Some(c) = pairing_cache().lock().expect("cache poisoned").get(g) {
        return Ok(c.clone());
    }
    let d = g.small_divisors().expect("bounded order");
    let r = d.len();
    let table = ElementTable::new(d.clone());
    let full = table.order();
    // Gram entry (i, j) lies in Z/gcd(d_i, d_j); e_i pairs with e_j to
    // B_ij / gcd(d_i, d_j). The image of e_i in the dual, written in the
    // coordinates χ ↦ (d_j χ(e_j))_j, is (B_ij d_j / gcd(d_i, d_j))_j.
    let slots: Vec<(usize, usize, u64)> = (0..r)
        .flat_map(|i| (i..r).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, d[i].gcd(&d[j])))
        .collect();
    let mut choice = vec![0u64; slots.len()];
    let mut count = 0u64;
    let mut seen = vec![false; full];
    loop {
        let mut gram = vec![0u64; r * r];
        for (&(i, j, _), &b) in slots.iter().zip(&choice) {
            gram[i * r + j] = b;
            gram[j * r + i] = b;
        }
        let images: Vec<usize> = (0..r)
            .map(|i| {
                let coords: Vec<u64> = (0..r)
                    .map(|j| gram[i * r + j] * (d[j] / d[i].gcd(&d[j])) % d[j])
                    .collect();
                table.index(&coords)
            })
            .collect();
        if spans_everything(&table, &images, &mut seen) {
            count += 1;
        }
        // odometer over the Gram entries
        let mut t = 0;
        loop {
            if t == slots.len() {
                let result = BigUint::from(count);
                pairing_cache()
                    .lock()
                    .expect("cache poisoned")
                    .insert(g.clone(), result.clone());
                return Ok(result);
            }
            choice[t] += 1;
            if choice[t] < slots[t].2 {
                break;
            }
            choice[t] = 0;
            t += 1;
        }
    }
}

/// Whether the given elements generate the whole group.
fn spans_everything(table: &ElementTable, gens: &[usize], seen: &mut [bool]) -> bool {
    seen.iter_mut().for_each(|s| *s = false);
    let mut members = vec![0usize];
    seen[0] = true;
    for &g in gens {
        if seen[g] {
            continue;
        }
        // members + <g>
        let base = members.clone();
        let mut step = g;
        while !seen[step] {
            for &m in &base {
                let x = table.add(m, step);
                if !seen[x] {
                    seen[x] = true;
                    members.push(x);
                }
            }
            step = table.add(step, g);
        }
    }
    members.len() == table.order()
}

/// `E[#Sur(Γ_CL^{(u)}, G)] = |G|^{-u}`.
pub fn cl_moment(g: &FiniteAbelianGroup, u: u32) -> Result<BigRational> {
    let order: BigInt = g.order()?.into();
    Ok(BigRational::new(BigInt::one(), order.pow(u)))
}

/// `E[#Sur(Γ_sandpile, G)] = |∧²G|`.
pub fn sandpile_moment(g: &FiniteAbelianGroup) -> Result<BigUint> {
    g.exterior_square_order()
}

/// `|∧²G[h]|`.
pub fn h_moment(g: &FiniteAbelianGroup, h: u64) -> Result<BigUint> {
    if h == 0 {
        return Err(Error::InvalidArgument("h must be positive".into()));
    }
    g.order()?;
    g.torsion_of_order_dividing(h).exterior_square_order()
}

/// `|∧²G[h]| / |∧²G|`.
pub fn isotropy_fraction_limit(g: &FiniteAbelianGroup, h: u64) -> Result<BigRational> {
    let num: BigInt = h_moment(g, h)?.into();
    let den: BigInt = sandpile_moment(g)?.into();
    Ok(BigRational::new(num, den))
}

/// All p-groups of order at most `p^max_exponent`, by order and then by
/// partition in lexicographic order.
pub fn p_groups_up_to(p: u64, max_exponent: u32) -> Vec<FiniteAbelianGroup> {
    (0..=max_exponent)
        .flat_map(|m| p_groups_of_order(p, m))
        .collect()
}

/// `Σ_{|G| <= p^B} Γ(G)`.
pub fn partial_mass(dist: &LimitDistribution, max_exponent: u32) -> Result<f64> {
    p_groups_up_to(dist.prime(), max_exponent)
        .iter()
        .map(|g| dist.probability(g).map(|v| v.value))
        .sum()
}

/// `Σ_{|G| <= p^B} Γ(G) · #Sur(G, H)`, the truncated `H`-moment.
pub fn partial_moment(dist: &LimitDistribution, h: &FiniteAbelianGroup, max_exponent: u32) -> Result<f64> {
    let mut total = 0.0;
    for g in p_groups_up_to(dist.prime(), max_exponent) {
        let s = count_sur(&g, h)?;
        if s.is_zero() {
            continue;
        }
        total += dist.probability(&g)?.value * big_to_f64(&s);
    }
    Ok(total)
}
