//! Random matrix ensembles with seeded, order-independent sampling.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{is_prime, prime_factors};
use crate::linalg::ExactMatrix;
use crate::rng::SeedSpec;

/// Largest support of a uniform-range distribution.
pub const MAX_RANGE_SUPPORT: u64 = 1 << 20;

/// Distribution of a single matrix entry.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EntryDistribution {
    /// Uniform on `{0, ..., a-1}`.
    UniformMod { a: u64 },
    /// `v1` with probability `prob1`, else `v0`.
    TwoPoint { v0: i64, v1: i64, prob1: (i64, i64) },
    /// Uniform on `{lo, ..., hi}`.
    UniformRange { lo: i64, hi: i64 },
}

impl EntryDistribution {
    pub fn uniform_mod(a: u64) -> Result<Self> {
        if a == 0 {
            return Err(Error::InvalidModel("uniform_mod needs a >= 1".into()));
        }
        Ok(Self::UniformMod { a })
    }

    pub fn two_point(v0: i64, v1: i64, prob1: Rational64) -> Result<Self> {
        if prob1 <= Rational64::zero() || prob1 >= Rational64::one() {
            return Err(Error::InvalidModel(format!(
                "two_point probability must lie in (0, 1), got {prob1}"
            )));
        }
        if v0 == v1 {
            return Err(Error::InvalidModel("two_point needs distinct values".into()));
        }
        Ok(Self::TwoPoint {
            v0,
            v1,
            prob1: (*prob1.numer(), *prob1.denom()),
        })
    }

    pub fn uniform_range(lo: i64, hi: i64) -> Result<Self> {
        if hi < lo {
            return Err(Error::InvalidModel(format!("empty range [{lo}, {hi}]")));
        }
        if (hi as i128 - lo as i128) as u128 >= MAX_RANGE_SUPPORT as u128 {
            return Err(Error::InvalidModel(format!(
                "range [{lo}, {hi}] exceeds {MAX_RANGE_SUPPORT} values"
            )));
        }
        Ok(Self::UniformRange { lo, hi })
    }

    /// The fair bit on `{0, 1}`.
    pub fn fair_bit() -> Self {
        Self::UniformRange { lo: 0, hi: 1 }
    }

    /// Default entry distribution for a ring: uniform over `Z/aZ`, or a
    /// fair bit over `Z`.
    pub fn default_for(modulus: u64) -> Self {
        if modulus == 0 {
            Self::fair_bit()
        } else {
            Self::UniformMod { a: modulus }
        }
    }

    /// Whether this is the uniform distribution on `Z/aZ`.
    pub fn is_uniform_mod(&self, a: u64) -> bool {
        match *self {
            Self::UniformMod { a: b } => a > 0 && b % a == 0,
            Self::UniformRange { lo, hi } => a > 0 && (hi as i128 - lo as i128 + 1) % a as i128 == 0,
            Self::TwoPoint { .. } => false,
        }
    }

    fn prob1(&self) -> Rational64 {
        match *self {
            Self::TwoPoint { prob1: (n, d), .. } => Rational64::new(n, d),
            _ => Rational64::zero(),
        }
    }

    /// One draw at `(row, col, draw)` of the stream.
    pub fn draw(&self, seed: &SeedSpec, row: usize, col: usize, draw: u32) -> i64 {
        match *self {
            Self::UniformMod { a } => seed.below(row, col, draw, a) as i64,
            Self::TwoPoint { v0, v1, prob1: (n, d) } => {
                if seed.below(row, col, draw, d as u64) < n as u64 {
                    v1
                } else {
                    v0
                }
            }
            Self::UniformRange { lo, hi } => {
                lo + seed.below(row, col, draw, (hi - lo) as u64 + 1) as i64
            }
        }
    }

    /// Largest probability mass of a single residue class mod `p`.
    fn max_class_mass(&self, p: u64) -> Rational64 {
        let uniform = |count: u64| {
            let per_class = count.div_ceil(p).min(count);
            Rational64::new(per_class as i64, count as i64)
        };
        match *self {
            Self::UniformMod { a } => uniform(a),
            Self::UniformRange { lo, hi } => uniform((hi - lo) as u64 + 1),
            Self::TwoPoint { v0, v1, .. } => {
                let q = self.prob1();
                if (v1 as i128 - v0 as i128) % p as i128 == 0 {
                    Rational64::one()
                } else {
                    q.max(Rational64::one() - q)
                }
            }
        }
    }

    /// Largest point mass; the class mass mod any prime exceeding the
    /// spread of the support.
    fn max_point_mass(&self) -> Rational64 {
        match *self {
            Self::UniformMod { a } => Rational64::new(1, a as i64),
            Self::UniformRange { lo, hi } => Rational64::new(1, hi - lo + 1),
            Self::TwoPoint { .. } => {
                let q = self.prob1();
                q.max(Rational64::one() - q)
            }
        }
    }

    fn spread(&self) -> u64 {
        match *self {
            Self::UniformMod { a } => a - 1,
            Self::UniformRange { lo, hi } => (hi - lo) as u64,
            Self::TwoPoint { v0, v1, .. } => v0.abs_diff(v1),
        }
    }
}

impl fmt::Display for EntryDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UniformMod { a } => write!(f, "uniform_mod:{a}"),
            Self::TwoPoint { v0, v1, prob1: (n, d) } => write!(f, "two_point:{v0},{v1},{n}/{d}"),
            Self::UniformRange { lo, hi } => write!(f, "uniform_range:{lo},{hi}"),
        }
    }
}

impl std::str::FromStr for EntryDistribution {
    type Err = Error;

    /// `uniform_mod:A`, `two_point:V0,V1,P` (P decimal or `n/d`),
    /// `uniform_range:LO,HI`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        let args: Vec<&str> = args.split(',').map(str::trim).filter(|a| !a.is_empty()).collect();
        let int = |x: &str| {
            x.parse::<i64>()
                .map_err(|_| Error::Parse(format!("bad integer {x:?} in distribution {s:?}")))
        };
        match (kind, args.as_slice()) {
            ("uniform_mod", [a]) => Self::uniform_mod(
                a.parse()
                    .map_err(|_| Error::Parse(format!("bad modulus in {s:?}")))?,
            ),
            ("two_point", [v0, v1, p]) => Self::two_point(int(v0)?, int(v1)?, parse_probability(p)?),
            ("uniform_range", [lo, hi]) => Self::uniform_range(int(lo)?, int(hi)?),
            _ => Err(Error::Parse(format!("unrecognized distribution {s:?}"))),
        }
    }
}

/// A probability written as a decimal (`0.25`) or a fraction (`1/4`).
pub fn parse_probability(s: &str) -> Result<Rational64> {
    let bad = || Error::Parse(format!("bad probability {s:?}"));
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Rational64::new(n, d));
    }
    let (int_part, frac_part) = s.split_once('.').unwrap_or((s, ""));
    if frac_part.len() > 15 || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let int_part: i64 = if int_part.is_empty() {
        0
    } else {
        int_part.parse().map_err(|_| bad())?
    };
    let denom = 10i64.pow(frac_part.len() as u32);
    let frac: i64 = if frac_part.is_empty() {
        0
    } else {
        frac_part.parse().map_err(|_| bad())?
    };
    Ok(Rational64::new(int_part * denom + frac, denom))
}

/// Largest certified `ε` such that no residue class modulo a relevant
/// prime carries more than `1 - ε` of the mass. The relevant primes are
/// those dividing `modulus`, or every prime when `modulus == 0`.
pub fn check_balanced(dist: &EntryDistribution, modulus: u64) -> Result<Rational64> {
    let worst = if modulus > 0 {
        prime_factors(modulus)
            .into_iter()
            .map(|p| dist.max_class_mass(p))
            .max()
            .unwrap_or_else(Rational64::zero)
    } else {
        (2..=dist.spread())
            .filter(|&p| is_prime(p))
            .map(|p| dist.max_class_mass(p))
            .chain(std::iter::once(dist.max_point_mass()))
            .max()
            .expect("nonempty")
    };
    let eps = Rational64::one() - worst;
    if modulus == 1 {
        // the zero ring has no maximal ideals
        return Ok(Rational64::one());
    }
    if eps <= Rational64::zero() {
        return Err(Error::Unbalanced(format!(
            "{dist} puts all its mass on one residue class"
        )));
    }
    Ok(eps)
}

/// The shape of a random matrix ensemble.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    /// `rows x cols` with independent entries.
    Iid { rows: usize, cols: usize },
    Symmetric { n: usize },
    /// `X - X^T = C` for a fixed alternating `C`.
    CSymmetric {
        n: usize,
        #[serde(with = "matrix_serde")]
        c: ExactMatrix,
    },
    /// Symmetric plus `h·y_ij` above the diagonal, `y_ij` from `perturbation`.
    SymmetricModH {
        n: usize,
        h: u64,
        perturbation: EntryDistribution,
    },
    /// Symmetric plus fixed units at positions sharing no index.
    CornerPerturbed {
        n: usize,
        positions: Vec<(usize, usize)>,
        units: Vec<i64>,
    },
    /// Uniform alternating matrix.
    AlternatingUniform { n: usize },
    /// Symmetric plus a uniform strictly-upper-triangular block in the
    /// top-left `k x k` corner.
    RandomCorner { n: usize, k: usize },
}

mod matrix_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::linalg::{ExactMatrix, MatrixJson};

    pub fn serialize<S: Serializer>(m: &ExactMatrix, s: S) -> Result<S::Ok, S::Error> {
        m.to_json().map_err(serde::ser::Error::custom)?.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ExactMatrix, D::Error> {
        let json = MatrixJson::deserialize(d)?;
        ExactMatrix::from_json(&json).map_err(serde::de::Error::custom)
    }
}

/// A validated ensemble: shape, ring `Z/aZ` (`modulus == 0` for `Z`) and
/// entry distribution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixModel {
    kind: ModelKind,
    modulus: u64,
    dist: EntryDistribution,
    epsilon: (i64, i64),
}

/// What `X - X^T` is for every sample of a model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DerivedForm {
    Fixed(ExactMatrix),
    Randomized,
}

fn is_unit(u: i64, modulus: u64) -> bool {
    if modulus == 0 {
        u == 1 || u == -1
    } else {
        (u.rem_euclid(modulus as i64) as u64).gcd(&modulus) == 1
    }
}

impl MatrixModel {
    pub fn new(kind: ModelKind, modulus: u64, dist: EntryDistribution) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidModel(msg));
        let n = kind.rows();
        if n == 0 || kind.cols() == 0 {
            return invalid("matrix dimensions must be positive".into());
        }
        match &kind {
            ModelKind::CSymmetric { n, c } => {
                if c.rows() != *n || c.cols() != *n {
                    return invalid(format!("C is {}x{}, expected {n}x{n}", c.rows(), c.cols()));
                }
                if c.modulus() != modulus {
                    return invalid(format!(
                        "C is over modulus {}, model over {modulus}",
                        c.modulus()
                    ));
                }
                if !c.is_alternating() {
                    return Err(Error::NotAlternating);
                }
                if c.to_i64().is_none() {
                    return invalid("entries of C exceed the i64 range".into());
                }
            }
            ModelKind::SymmetricModH { h, perturbation, .. } => {
                if *h == 0 {
                    return invalid("h must be positive".into());
                }
                if modulus > 0 && modulus % h != 0 {
                    return invalid(format!("h = {h} does not divide a = {modulus}"));
                }
                check_balanced(perturbation, modulus)?;
            }
            ModelKind::CornerPerturbed {
                n,
                positions,
                units,
            } => {
                if positions.len() != units.len() {
                    return invalid(format!(
                        "{} positions but {} units",
                        positions.len(),
                        units.len()
                    ));
                }
                let mut seen = vec![false; *n];
                for &(i, j) in positions {
                    if i >= *n || j >= *n {
                        return invalid(format!("position ({i}, {j}) outside a {n}x{n} matrix"));
                    }
                    if i == j || seen[i] || seen[j] {
                        return invalid(format!("position ({i}, {j}) shares a row or column"));
                    }
                    seen[i] = true;
                    seen[j] = true;
                }
                if let Some(u) = units.iter().find(|&&u| !is_unit(u, modulus)) {
                    return invalid(format!("{u} is not a unit"));
                }
            }
            ModelKind::AlternatingUniform { .. } | ModelKind::RandomCorner { .. } if modulus == 0 => {
                return invalid("uniform alternating parts need a finite ring".into());
            }
            ModelKind::RandomCorner { n, k } if k > n => {
                return invalid(format!("corner size {k} exceeds n = {n}"));
            }
            _ => {}
        }
        let eps = check_balanced(&dist, modulus)?;
        Ok(Self {
            kind,
            modulus,
            dist,
            epsilon: (*eps.numer(), *eps.denom()),
        })
    }

    pub fn iid(rows: usize, cols: usize, modulus: u64) -> Result<Self> {
        Self::new(ModelKind::Iid { rows, cols }, modulus, EntryDistribution::default_for(modulus))
    }

    pub fn symmetric(n: usize, modulus: u64) -> Result<Self> {
        Self::new(ModelKind::Symmetric { n }, modulus, EntryDistribution::default_for(modulus))
    }

    pub fn c_symmetric(c: ExactMatrix) -> Result<Self> {
        let modulus = c.modulus();
        Self::new(
            ModelKind::CSymmetric { n: c.rows(), c },
            modulus,
            EntryDistribution::default_for(modulus),
        )
    }

    pub fn symmetric_mod_h(n: usize, h: u64, modulus: u64) -> Result<Self> {
        let dist = EntryDistribution::default_for(modulus);
        Self::new(
            ModelKind::SymmetricModH {
                n,
                h,
                perturbation: dist.clone(),
            },
            modulus,
            dist,
        )
    }

    pub fn corner_perturbed(n: usize, positions: Vec<(usize, usize)>, units: Vec<i64>, modulus: u64) -> Result<Self> {
        Self::new(
            ModelKind::CornerPerturbed {
                n,
                positions,
                units,
            },
            modulus,
            EntryDistribution::default_for(modulus),
        )
    }

    pub fn alternating_uniform(n: usize, modulus: u64) -> Result<Self> {
        Self::new(
            ModelKind::AlternatingUniform { n },
            modulus,
            EntryDistribution::default_for(modulus),
        )
    }

    pub fn random_corner(n: usize, k: usize, modulus: u64) -> Result<Self> {
        Self::new(
            ModelKind::RandomCorner { n, k },
            modulus,
            EntryDistribution::default_for(modulus),
        )
    }

    pub fn with_distribution(self, dist: EntryDistribution) -> Result<Self> {
        Self::new(self.kind, self.modulus, dist)
    }

    /// Replace the second distribution of a `symmetric_mod_h` model.
    pub fn with_perturbation(self, perturbation: EntryDistribution) -> Result<Self> {
        match self.kind {
            ModelKind::SymmetricModH { n, h, .. } => Self::new(
                ModelKind::SymmetricModH { n, h, perturbation },
                self.modulus,
                self.dist,
            ),
            _ => Err(Error::InvalidModel("only symmetric_mod_h takes a perturbation".into())),
        }
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn distribution(&self) -> &EntryDistribution {
        &self.dist
    }

    /// The balancedness constant certified at construction.
    pub fn epsilon(&self) -> Rational64 {
        Rational64::new(self.epsilon.0, self.epsilon.1)
    }

    pub fn rows(&self) -> usize {
        self.kind.rows()
    }

    pub fn cols(&self) -> usize {
        self.kind.cols()
    }

    /// Short human-readable name, e.g. `symmetric(n=40, a=4)`.
    pub fn label(&self) -> String {
        let a = self.modulus;
        match &self.kind {
            ModelKind::Iid { rows, cols } => format!("iid(n={rows}, m={cols}, a={a})"),
            ModelKind::Symmetric { n } => format!("symmetric(n={n}, a={a})"),
            ModelKind::CSymmetric { n, .. } => format!("c_symmetric(n={n}, a={a})"),
            ModelKind::SymmetricModH { n, h, .. } => format!("symmetric_mod_h(n={n}, h={h}, a={a})"),
            ModelKind::CornerPerturbed { n, positions, .. } => {
                format!("corner_perturbed(n={n}, k={}, a={a})", positions.len())
            }
            ModelKind::AlternatingUniform { n } => format!("alternating_uniform(n={n}, a={a})"),
            ModelKind::RandomCorner { n, k } => format!("random_corner(n={n}, k={k}, a={a})"),
        }
    }

    fn reduce(&self, x: i64) -> i64 {
        if self.modulus == 0 {
            x
        } else {
            x.rem_euclid(self.modulus as i64)
        }
    }

    /// Row-major entries of one sample, reduced into `[0, a)` over `Z/aZ`.
    pub fn sample_entries(&self, seed: &SeedSpec) -> Vec<i64> {
        self.build_entries(seed)
    }

    fn build_entries<S: DrawSource>(&self, seed: &S) -> Vec<i64> {
        let (rows, cols) = (self.rows(), self.cols());
        let mut x = vec![0i64; rows * cols];
        let d = &self.dist;
        let symmetric_base = |x: &mut Vec<i64>, n: usize| {
            for i in 0..n {
                for j in i..n {
                    let v = seed.entry(d, i, j, 0);
                    x[i * n + j] = v;
                    x[j * n + i] = v;
                }
            }
        };
        match &self.kind {
            ModelKind::Iid { .. } => {
                for i in 0..rows {
                    for j in 0..cols {
                        x[i * cols + j] = seed.entry(d, i, j, 0);
                    }
                }
            }
            ModelKind::Symmetric { n } => symmetric_base(&mut x, *n),
            ModelKind::CSymmetric { n, c } => {
                let n = *n;
                let c = c.to_i64().expect("checked at construction");
                for i in 0..n {
                    for j in i..n {
                        let v = seed.entry(d, i, j, 0);
                        x[i * n + j] = v;
                        if j > i {
                            x[j * n + i] = v - c[i * n + j];
                        }
                    }
                }
            }
            ModelKind::SymmetricModH { n, h, perturbation } => {
                let n = *n;
                symmetric_base(&mut x, n);
                for i in 0..n {
                    for j in i + 1..n {
                        x[i * n + j] += *h as i64 * seed.entry(perturbation, i, j, 1);
                    }
                }
            }
            ModelKind::CornerPerturbed {
                n,
                positions,
                units,
            } => {
                let n = *n;
                symmetric_base(&mut x, n);
                for (&(i, j), &u) in positions.iter().zip(units) {
                    x[i * n + j] += u;
                }
            }
            ModelKind::AlternatingUniform { n } => {
                let n = *n;
                for i in 0..n {
                    for j in i + 1..n {
                        let v = seed.below(i, j, 0, self.modulus) as i64;
                        x[i * n + j] = v;
                        x[j * n + i] = -v;
                    }
                }
            }
            ModelKind::RandomCorner { n, k } => {
                let n = *n;
                symmetric_base(&mut x, n);
                for i in 0..*k {
                    for j in i + 1..*k {
                        x[i * n + j] += seed.below(i, j, 1, self.modulus) as i64;
                    }
                }
            }
        }
        for v in &mut x {
            *v = self.reduce(*v);
        }
        x
    }

    /// Draw one matrix. Identical `(model, seed)` give identical output.
    pub fn sample(&self, seed: &SeedSpec) -> ExactMatrix {
        let entries = self
            .sample_entries(seed)
            .into_iter()
            .map(BigInt::from)
            .collect();
        ExactMatrix::new(self.rows(), self.cols(), self.modulus, entries).expect("validated shape")
    }

    fn draw_slots(&self) -> Vec<Slot> {
        let recorder = SlotRecorder::default();
        self.build_entries(&recorder);
        recorder.slots.into_inner()
    }

    /// Number of equally likely draw assignments behind one sample when
    /// every draw is uniform mod `a`; `None` on overflow.
    pub fn support_size(&self) -> Option<u64> {
        let slots = self.draw_slots().len();
        (0..slots).try_fold(1u64, |acc, _| acc.checked_mul(self.modulus))
    }

    /// Visit every matrix of the support once, each with equal weight
    /// `1/count`. Only for models whose entries are uniform over the ring.
    /// Returns the number of matrices visited.
    pub fn for_each_support_matrix(&self, bound: u64, mut visit: impl FnMut(&[i64])) -> Result<u64> {
        if !self.has_uniform_entries() {
            return Err(Error::InvalidArgument(format!(
                "support enumeration needs entries uniform mod {}",
                self.modulus
            )));
        }
        let slots = self.draw_slots();
        let a = self.modulus;
        let count = self.support_size().filter(|&c| c <= bound).ok_or_else(|| Error::BoundExceeded {
            what: "support enumeration",
            needed: format!("{a}^{}", slots.len()),
            limit: bound.to_string(),
        })?;
        let mut script = ScriptedDraws {
            index: slots.iter().enumerate().map(|(i, &k)| (k, i)).collect(),
            values: vec![0; slots.len()],
        };
        for _ in 0..count {
            visit(&self.build_entries(&script));
            for v in script.values.iter_mut() {
                *v += 1;
                if *v < a {
                    break;
                }
                *v = 0;
            }
        }
        Ok(count)
    }

    /// The alternating `C` with `X - X^T = C` for every sample, when it
    /// does not depend on the sample.
    pub fn derive_form(&self) -> DerivedForm {
        let a = self.modulus;
        match &self.kind {
            ModelKind::Symmetric { n } => {
                DerivedForm::Fixed(ExactMatrix::zeros(*n, *n, a).expect("positive size"))
            }
            ModelKind::CSymmetric { c, .. } => DerivedForm::Fixed(c.clone()),
            ModelKind::CornerPerturbed {
                n,
                positions,
                units,
            } => {
                let mut c = ExactMatrix::zeros(*n, *n, a).expect("positive size");
                for (&(i, j), &u) in positions.iter().zip(units) {
                    c.set(i, j, BigInt::from(u));
                    c.set(j, i, BigInt::from(-u));
                }
                DerivedForm::Fixed(c)
            }
            ModelKind::Iid { .. }
            | ModelKind::SymmetricModH { .. }
            | ModelKind::AlternatingUniform { .. }
            | ModelKind::RandomCorner { .. } => DerivedForm::Randomized,
        }
    }

    /// Whether every entry is drawn uniformly from the ring, so the
    /// model's support can be enumerated with equal weights.
    pub(crate) fn has_uniform_entries(&self) -> bool {
        let a = self.modulus;
        a > 0
            && self.dist.is_uniform_mod(a)
            && match &self.kind {
                ModelKind::SymmetricModH { perturbation, .. } => perturbation.is_uniform_mod(a),
                _ => true,
            }
    }
}

impl ModelKind {
    pub fn rows(&self) -> usize {
        match *self {
            Self::Iid { rows, .. } => rows,
            Self::Symmetric { n }
            | Self::CSymmetric { n, .. }
            | Self::SymmetricModH { n, .. }
            | Self::CornerPerturbed { n, .. }
            | Self::AlternatingUniform { n }
            | Self::RandomCorner { n, .. } => n,
        }
    }

    pub fn cols(&self) -> usize {
        match *self {
            Self::Iid { cols, .. } => cols,
            _ => self.rows(),
        }
    }
}

/// Where the entries of a sample come from: a seeded stream, or a
/// scripted assignment when enumerating the support.
trait DrawSource {
    fn entry(&self, dist: &EntryDistribution, row: usize, col: usize, draw: u32) -> i64;
    fn below(&self, row: usize, col: usize, draw: u32, bound: u64) -> u64;
}

impl DrawSource for SeedSpec {
    fn entry(&self, dist: &EntryDistribution, row: usize, col: usize, draw: u32) -> i64 {
        dist.draw(self, row, col, draw)
    }

    fn below(&self, row: usize, col: usize, draw: u32, bound: u64) -> u64 {
        SeedSpec::below(self, row, col, draw, bound)
    }
}

type Slot = (usize, usize, u32);

#[derive(Default)]
struct SlotRecorder {
    slots: std::cell::RefCell<Vec<Slot>>,
}

impl SlotRecorder {
    fn record(&self, slot: Slot) {
        let mut s = self.slots.borrow_mut();
        if !s.contains(&slot) {
            s.push(slot);
        }
    }
}

impl DrawSource for SlotRecorder {
    fn entry(&self, _: &EntryDistribution, row: usize, col: usize, draw: u32) -> i64 {
        self.record((row, col, draw));
        0
    }

    fn below(&self, row: usize, col: usize, draw: u32, _: u64) -> u64 {
        self.record((row, col, draw));
        0
    }
}

/// Every slot takes a value in `0..a`; for entries uniform mod `a` this
/// has the same law after reduction.
struct ScriptedDraws {
    index: std::collections::HashMap<Slot, usize>,
    values: Vec<u64>,
}

impl DrawSource for ScriptedDraws {
    fn entry(&self, _: &EntryDistribution, row: usize, col: usize, draw: u32) -> i64 {
        self.values[self.index[&(row, col, draw)]] as i64
    }

    fn below(&self, row: usize, col: usize, draw: u32, _: u64) -> u64 {
        self.values[self.index[&(row, col, draw)]]
    }
}

/// Corner positions `(0,1), (2,3), ...` for `k` disjoint transpositions.
pub fn disjoint_positions(k: usize) -> Vec<(usize, usize)> {
    (0..k).map(|t| (2 * t, 2 * t + 1)).collect()
}

/// Alternating matrix with blocks `[[0, 1], [-1, 0]]` on the first
/// `2·(rank/2)` indices: rank `rank` (rounded down to even) over any ring.
pub fn standard_alternating(n: usize, rank: usize, modulus: u64) -> ExactMatrix {
    let mut c = ExactMatrix::zeros(n, n, modulus).expect("positive size");
    for t in 0..(rank / 2).min(n / 2) {
        c.set(2 * t, 2 * t + 1, BigInt::one());
        c.set(2 * t + 1, 2 * t, -BigInt::one());
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seed(i: u64) -> SeedSpec {
        SeedSpec::new(7, i)
    }

    #[test]
    fn balanced_examples() {
        let half = Rational64::new(1, 2);
        let bit = EntryDistribution::two_point(0, 1, half).unwrap();
        assert_eq!(check_balanced(&bit, 0).unwrap(), half);
        assert_eq!(check_balanced(&EntryDistribution::uniform_mod(4).unwrap(), 4).unwrap(), half);
        assert!(check_balanced(&EntryDistribution::uniform_mod(1).unwrap(), 0).is_err());
        assert_eq!(
            check_balanced(&EntryDistribution::uniform_mod(3).unwrap(), 3).unwrap(),
            Rational64::new(2, 3)
        );
        // values 0 and 2 agree mod 2
        let even = EntryDistribution::two_point(0, 2, half).unwrap();
        assert!(check_balanced(&even, 4).is_err());
        assert_eq!(check_balanced(&even, 3).unwrap(), half);
        assert!(check_balanced(&even, 0).is_err());
        let skew = EntryDistribution::two_point(0, 1, Rational64::new(1, 10)).unwrap();
        assert_eq!(check_balanced(&skew, 0).unwrap(), Rational64::new(1, 10));
    }

    #[test]
    fn constant_rejected() {
        assert!(EntryDistribution::two_point(3, 3, Rational64::new(1, 2)).is_err());
        assert!(EntryDistribution::uniform_range(5, 5)
            .and_then(|d| MatrixModel::new(ModelKind::Symmetric { n: 3 }, 0, d))
            .is_err());
    }

    #[test]
    fn parse_distributions() {
        let d: EntryDistribution = "two_point:0,1,0.5".parse().unwrap();
        assert_eq!(d, EntryDistribution::two_point(0, 1, Rational64::new(1, 2)).unwrap());
        let d: EntryDistribution = "uniform_range:-1,1".parse().unwrap();
        assert_eq!(d, EntryDistribution::UniformRange { lo: -1, hi: 1 });
        assert!("two_point:0,1".parse::<EntryDistribution>().is_err());
        assert!("gaussian:0,1".parse::<EntryDistribution>().is_err());
        assert_eq!(parse_probability("1/3").unwrap(), Rational64::new(1, 3));
        assert_eq!(parse_probability(".25").unwrap(), Rational64::new(1, 4));
        let d: EntryDistribution = "two_point:0,1,1/3".parse().unwrap();
        assert_eq!(d.to_string().parse::<EntryDistribution>().unwrap(), d);
    }

    #[test]
    fn c_symmetric_zero_is_symmetric() {
        let model = MatrixModel::c_symmetric(ExactMatrix::zeros(5, 5, 4).unwrap()).unwrap();
        for t in 0..20 {
            let x = model.sample(&seed(t));
            assert!(x.is_symmetric());
        }
    }

    #[test]
    fn c_symmetric_difference_is_c() {
        let c = ExactMatrix::from_rows(&[[0, 1, 3], [-1, 0, 2], [-3, -2, 0]], 5).unwrap();
        let model = MatrixModel::c_symmetric(c.clone()).unwrap();
        for t in 0..20 {
            let x = model.sample(&seed(t));
            assert_eq!(x.sub(&x.transpose()).unwrap(), c);
        }
        let over_z = ExactMatrix::from_rows(&[[0, 7], [-7, 0]], 0).unwrap();
        let model = MatrixModel::c_symmetric(over_z.clone()).unwrap();
        let x = model.sample(&seed(1));
        assert_eq!(x.sub(&x.transpose()).unwrap(), over_z);
    }

    #[test]
    fn c_symmetric_rejects_bad_forms() {
        let sym = ExactMatrix::from_rows(&[[0, 1], [1, 0]], 0).unwrap();
        assert_eq!(MatrixModel::c_symmetric(sym).unwrap_err(), Error::NotAlternating);
        let c = ExactMatrix::zeros(2, 2, 3).unwrap();
        assert!(MatrixModel::new(
            ModelKind::CSymmetric { n: 2, c },
            4,
            EntryDistribution::default_for(4)
        )
        .is_err());
    }

    #[test]
    fn corner_perturbed_difference() {
        let k = 3;
        let model = MatrixModel::corner_perturbed(8, disjoint_positions(k), vec![1, 3, 1], 4).unwrap();
        let x = model.sample(&seed(3));
        let diff = x.sub(&x.transpose()).unwrap();
        let nonzero = diff.entries().iter().filter(|e| !e.is_zero()).count();
        assert_eq!(nonzero, 2 * k);
        let DerivedForm::Fixed(c) = model.derive_form() else {
            panic!("corner perturbation has a fixed form")
        };
        assert_eq!(diff, c);
        assert!(c.is_alternating());
    }

    #[test]
    fn corner_perturbed_validation() {
        assert!(MatrixModel::corner_perturbed(4, vec![(0, 1), (1, 2)], vec![1, 1], 4).is_err());
        assert!(MatrixModel::corner_perturbed(4, vec![(0, 0)], vec![1], 4).is_err());
        assert!(MatrixModel::corner_perturbed(4, vec![(0, 1)], vec![2], 4).is_err());
        assert!(MatrixModel::corner_perturbed(4, vec![(0, 5)], vec![1], 4).is_err());
        assert!(MatrixModel::corner_perturbed(4, vec![(0, 1)], vec![], 4).is_err());
    }

    #[test]
    fn derive_form_examples() {
        let DerivedForm::Fixed(z) = MatrixModel::symmetric(3, 2).unwrap().derive_form() else {
            panic!()
        };
        assert!(z.is_zero());
        let model = MatrixModel::corner_perturbed(3, vec![(0, 1)], vec![1], 0).unwrap();
        let DerivedForm::Fixed(c) = model.derive_form() else {
            panic!()
        };
        assert_eq!(c, ExactMatrix::from_rows(&[[0, 1, 0], [-1, 0, 0], [0, 0, 0]], 0).unwrap());
        assert_eq!(
            MatrixModel::symmetric_mod_h(3, 2, 4).unwrap().derive_form(),
            DerivedForm::Randomized
        );
        assert_eq!(
            MatrixModel::random_corner(4, 2, 4).unwrap().derive_form(),
            DerivedForm::Randomized
        );
    }

    #[test]
    fn symmetric_mod_h_difference_divisible() {
        let model = MatrixModel::symmetric_mod_h(6, 2, 8).unwrap();
        for t in 0..20 {
            let x = model.sample(&seed(t));
            let diff = x.sub(&x.transpose()).unwrap();
            assert!(diff.entries().iter().all(|e| (e % 2u32).is_zero()));
        }
    }

    #[test]
    fn alternating_uniform_is_alternating() {
        let model = MatrixModel::alternating_uniform(5, 3).unwrap();
        for t in 0..10 {
            assert!(model.sample(&seed(t)).is_alternating());
        }
        assert!(MatrixModel::alternating_uniform(5, 0).is_err());
    }

    #[test]
    fn random_corner_is_symmetric_outside_corner() {
        let model = MatrixModel::random_corner(6, 3, 5).unwrap();
        let x = model.sample(&seed(2));
        let diff = x.sub(&x.transpose()).unwrap();
        assert!(diff.is_alternating());
        for i in 0..6 {
            for j in 0..6 {
                if i >= 3 || j >= 3 {
                    assert!(diff.get(i, j).is_zero());
                }
            }
        }
    }

    #[test]
    fn reproducible() {
        let model = MatrixModel::iid(6, 7, 4).unwrap();
        assert_eq!(model.sample(&seed(9)), model.sample(&seed(9)));
        assert_ne!(model.sample(&seed(9)), model.sample(&seed(10)));
    }

    #[test]
    fn standard_alternating_rank() {
        let c = standard_alternating(5, 4, 2);
        assert!(c.is_alternating());
        assert_eq!(c.rank_mod_p(2).unwrap(), 4);
    }
}
