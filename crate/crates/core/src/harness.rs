//! Experiment driver: empirical moments and cokernel distributions,
//! exact small-case oracles, and the random-form and generation checks.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{is_prime, prime_factors, FiniteAbelianGroup, SurCounter};
use crate::isotropy::isotropy_probability_exact;
use crate::limits::{p_groups_up_to, LimitDistribution, PAIRING_ORDER_BOUND};
use crate::linalg::{cokernel, cokernel_mod, cokernel_of_small, column_span_index, ExactMatrix};
use crate::models::{standard_alternating, MatrixModel};
use crate::rng::SeedSpec;
use crate::stats::{try_tally_trials_multi, MomentEstimate};

/// Statistical margin, in standard errors, used by every check.
pub const SIGMAS: f64 = 4.0;

/// Largest support enumerated by the moment-sum oracle.
pub const SUPPORT_BOUND: u64 = 1 << 24;

/// Largest `support × #maps` product evaluated by the moment-sum oracle.
pub const ORACLE_WORK_BOUND: u64 = 1 << 28;

/// Largest number of matrices enumerated by exact alternating-form checks.
pub const FORM_ENUMERATION_BOUND: u64 = 1 << 24;

fn cokernel_of_entries(rows: usize, cols: usize, a: u64, entries: Vec<i64>) -> Result<FiniteAbelianGroup> {
    if a > 0 && a <= i64::MAX as u64 {
        if let Some(g) = cokernel_of_small(rows, cols, entries.clone(), a as i64) {
            return Ok(g);
        }
    }
    let m = ExactMatrix::new(rows, cols, a, entries.into_iter().map(BigInt::from).collect())?;
    if a == 0 {
        cokernel(&m)
    } else {
        cokernel_mod(&m)
    }
}

/// Cokernel of one sample of the model.
pub fn sample_cokernel(model: &MatrixModel, seed: &SeedSpec) -> Result<FiniteAbelianGroup> {
    cokernel_of_entries(model.rows(), model.cols(), model.modulus(), model.sample_entries(seed))
}

/// `#Sur(·, G)` memoized per source group across a run.
#[derive(Default)]
struct SurCache {
    counters: Mutex<HashMap<FiniteAbelianGroup, SurCounter>>,
}

impl SurCache {
    fn count(&self, source: &FiniteAbelianGroup, target: &FiniteAbelianGroup) -> Result<BigUint> {
        let mut map = self.counters.lock().expect("poisoned");
        map.entry(source.clone())
            .or_insert_with(|| SurCounter::new(source.clone()))
            .count(target)
    }
}

fn require_finite_targets(groups: &[FiniteAbelianGroup]) -> Result<()> {
    for g in groups {
        if !g.is_finite() {
            return Err(Error::InfiniteGroup(g.free_rank()));
        }
    }
    Ok(())
}

/// Monte Carlo estimate of `E[#Sur(coker X, G)]`. Trial `t` samples with
/// `seed.trial(t)`.
pub fn empirical_moment(
    model: &MatrixModel,
    g: &FiniteAbelianGroup,
    trials: u64,
    seed: SeedSpec,
) -> Result<MomentEstimate> {
    Ok(empirical_moments(model, std::slice::from_ref(g), trials, seed)?.remove(0))
}

/// Moments for several groups from the same cokernel samples.
pub fn empirical_moments(
    model: &MatrixModel,
    groups: &[FiniteAbelianGroup],
    trials: u64,
    seed: SeedSpec,
) -> Result<Vec<MomentEstimate>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    require_finite_targets(groups)?;
    let cache = SurCache::default();
    let tallies = try_tally_trials_multi(trials, groups.len(), |t| {
        let coker = sample_cokernel(model, &seed.trial(t))?;
        groups
            .iter()
            .map(|g| Ok(cache.count(&coker, g)?.to_f64().unwrap_or(f64::INFINITY)))
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok(tallies
        .iter()
        .zip(groups)
        .map(|(t, g)| MomentEstimate::from_tally(t, seed, g.clone(), model.label()))
        .collect())
}

/// Both sides of `E[#Sur(coker X, G)] = Σ_{F surjective} P[F∘X = 0]` for
/// one group, computed exactly over the model's full support.
pub fn moment_sum_oracle(model: &MatrixModel, g: &FiniteAbelianGroup) -> Result<(BigRational, BigRational)> {
    let cell = moment_sum_oracle_groups(model, std::slice::from_ref(g))?.remove(0);
    Ok((cell.lhs, cell.rhs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSumCell {
    pub group: FiniteAbelianGroup,
    /// Exact expectation of `#Sur(coker X, G)` over the support.
    #[serde(with = "rational_string")]
    pub lhs: BigRational,
    /// `Σ_F P[F∘X = 0]` over surjective `F`.
    #[serde(with = "rational_string")]
    pub rhs: BigRational,
}

impl MomentSumCell {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

pub(crate) mod rational_string {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Every surjection `(Z/aZ)^n -> G`, each as `r` rows of `n` coordinates.
fn surjections(moduli: &[u64], n: usize) -> Vec<Vec<u64>> {
    let r = moduli.len();
    let total: u64 = moduli.iter().map(|&e| e.pow(n as u32)).product();
    let mut out = Vec::new();
    let mut f = vec![0u64; r * n];
    for _ in 0..total {
        let cols: Vec<Vec<u64>> = (0..n).map(|l| (0..r).map(|s| f[s * n + l]).collect()).collect();
        if column_span_index(moduli, &cols) == BigUint::from(1u32) {
            out.push(f.clone());
        }
        for (idx, v) in f.iter_mut().enumerate() {
            *v += 1;
            if *v < moduli[idx / n] {
                break;
            }
            *v = 0;
        }
    }
    out
}

fn kills(f: &[u64], moduli: &[u64], x: &[i64], rows: usize, cols: usize) -> bool {
    (0..cols).all(|j| {
        moduli.iter().enumerate().all(|(s, &e)| {
            let mut acc = 0u64;
            for i in 0..rows {
                acc += f[s * rows + i] * x[i * cols + j] as u64;
            }
            acc % e == 0
        })
    })
}

/// [`moment_sum_oracle`] for several groups in one pass over the support.
pub fn moment_sum_oracle_groups(model: &MatrixModel, groups: &[FiniteAbelianGroup]) -> Result<Vec<MomentSumCell>> {
    let a = model.modulus();
    if a == 0 {
        return Err(Error::InvalidArgument("the moment-sum oracle needs a finite ring".into()));
    }
    require_finite_targets(groups)?;
    let (rows, cols) = (model.rows(), model.cols());
    let support = model.support_size().unwrap_or(u64::MAX);
    let mut maps = Vec::with_capacity(groups.len());
    for g in groups {
        let moduli = g.small_divisors().ok_or(Error::InfiniteGroup(0))?;
        if moduli.last().is_some_and(|&e| a % e != 0) {
            return Err(Error::InvalidArgument(format!("exponent of {g} does not divide {a}")));
        }
        let homs = moduli
            .iter()
            .try_fold(1u64, |acc, &e| acc.checked_mul(e.checked_pow(rows as u32)?))
            .unwrap_or(u64::MAX);
        if support.saturating_mul(homs) > ORACLE_WORK_BOUND {
            return Err(Error::BoundExceeded {
                what: "moment-sum oracle",
                needed: format!("{support} matrices x {homs} maps for {g}"),
                limit: ORACLE_WORK_BOUND.to_string(),
            });
        }
        maps.push((moduli.clone(), surjections(&moduli, rows)));
    }
    let cache = SurCache::default();
    let mut lhs = vec![BigUint::zero(); groups.len()];
    let mut hits = vec![0u64; groups.len()];
    let mut failure = None;
    let count = model.for_each_support_matrix(SUPPORT_BOUND, |x| {
        if failure.is_some() {
            return;
        }
        let coker = match cokernel_of_entries(rows, cols, a, x.to_vec()) {
            Ok(c) => c,
            Err(e) => {
                failure = Some(e);
                return;
            }
        };
        for (k, g) in groups.iter().enumerate() {
            match cache.count(&coker, g) {
                Ok(v) => lhs[k] += v,
                Err(e) => failure = Some(e),
            }
            let (moduli, surs) = &maps[k];
            hits[k] += surs.iter().filter(|f| kills(f, moduli, x, rows, cols)).count() as u64;
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let denom = BigInt::from(count);
    Ok(groups
        .iter()
        .zip(lhs.into_iter().zip(hits))
        .map(|(g, (l, h))| MomentSumCell {
            group: g.clone(),
            lhs: BigRational::new(BigInt::from(l), denom.clone()),
            rhs: BigRational::new(BigInt::from(h), denom.clone()),
        })
        .collect())
}

/// One class of the histogram of `coker X ⊗ Z/aZ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub label: String,
    pub group: FiniteAbelianGroup,
    pub count: u64,
    pub freq: f64,
    pub ref_prob: Option<f64>,
    pub abs_diff: Option<f64>,
    /// Binomial standard error of `freq` under the reference probability.
    pub ref_stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionTable {
    pub rows: Vec<DistributionRow>,
    pub total_trials: u64,
    pub modulus: u64,
    pub model: String,
    pub seed: SeedSpec,
    pub reference: Option<String>,
    /// Classes with a reference probability: groups whose exponent is
    /// below `a`, where the class of `Γ ⊗ Z/aZ` determines `Γ`.
    pub reference_kind: Option<String>,
    /// Total variation between the empirical and reference laws, on the
    /// partition into the exact reference classes plus one class for
    /// everything else.
    pub tv_distance: Option<f64>,
}

impl DistributionTable {
    /// Frequencies as exact fractions; they always sum to 1.
    pub fn exact_frequencies(&self) -> Vec<BigRational> {
        self.rows
            .iter()
            .map(|r| BigRational::new(r.count.into(), self.total_trials.into()))
            .collect()
    }

    pub fn row(&self, g: &FiniteAbelianGroup) -> Option<&DistributionRow> {
        self.rows.iter().find(|r| &r.group == g)
    }

    pub fn frequency(&self, g: &FiniteAbelianGroup) -> f64 {
        self.row(g).map_or(0.0, |r| r.freq)
    }

    pub fn to_csv_records(&self) -> Vec<[String; 5]> {
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v}"));
        self.rows
            .iter()
            .map(|r| {
                [
                    r.label.clone(),
                    r.count.to_string(),
                    format!("{}", r.freq),
                    opt(r.ref_prob),
                    opt(r.abs_diff),
                ]
            })
            .collect()
    }
}

/// `a` as `p^k` for the reference prime, or an error.
fn prime_power_exponent(a: u64, p: u64) -> Result<u32> {
    let mut k = 0;
    let mut x = a;
    while x > 1 && x % p == 0 {
        x /= p;
        k += 1;
    }
    if x != 1 || k == 0 {
        return Err(Error::InvalidArgument(format!(
            "reference comparison needs a power of {p}, got a = {a}"
        )));
    }
    Ok(k)
}

/// Reference classes for `Γ ⊗ Z/p^k`: `p`-groups of exponent below `p^k`
/// with a computable probability, most likely first.
pub fn exact_reference_classes(reference: &LimitDistribution, a: u64) -> Result<Vec<(FiniteAbelianGroup, f64)>> {
    let p = reference.prime();
    let k = prime_power_exponent(a, p)?;
    let max_exp = (PAIRING_ORDER_BOUND as f64).log(p as f64).floor() as u32;
    let mut out = Vec::new();
    for g in p_groups_up_to(p, max_exp) {
        let below = g.exponent()? < BigUint::from(p.pow(k));
        if below {
            if let Ok(v) = reference.probability(&g) {
                out.push((g, v.value));
            }
        }
    }
    out.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
    Ok(out)
}

/// Histogram of `coker X ⊗ Z/aZ` over `trials` samples, with reference
/// probabilities where they are determined.
pub fn empirical_distribution(
    model: &MatrixModel,
    a: u64,
    trials: u64,
    seed: SeedSpec,
    reference: Option<&LimitDistribution>,
) -> Result<DistributionTable> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let exact = reference.map(|r| exact_reference_classes(r, a)).transpose()?;
    let classes = crate::stats::map_trials(trials, |t| {
        sample_cokernel(model, &seed.trial(t)).map(|g| if a == 0 { g } else { g.tensor_mod(a) })
    });
    let mut counts: BTreeMap<FiniteAbelianGroup, u64> = BTreeMap::new();
    for c in classes {
        *counts.entry(c?).or_default() += 1;
    }
    let n = trials as f64;
    let lookup = |g: &FiniteAbelianGroup| {
        exact
            .as_ref()
            .and_then(|e| e.iter().find(|(h, _)| h == g).map(|&(_, v)| v))
    };
    let mut rows: Vec<DistributionRow> = counts
        .into_iter()
        .map(|(group, count)| {
            let freq = count as f64 / n;
            let ref_prob = lookup(&group);
            DistributionRow {
                label: group.to_string(),
                count,
                freq,
                ref_prob,
                abs_diff: ref_prob.map(|r| (freq - r).abs()),
                ref_stderr: ref_prob.map(|r| (r * (1.0 - r) / n).sqrt()),
                group,
            }
        })
        .collect();
    rows.sort_by(|x, y| y.count.cmp(&x.count).then_with(|| x.group.cmp(&y.group)));
    let tv_distance = exact.as_ref().map(|classes| {
        let mut diff = 0.0;
        let mut ref_rest = 1.0;
        let mut emp_rest = 1.0;
        for (g, r) in classes {
            let f = rows.iter().find(|row| &row.group == g).map_or(0.0, |row| row.freq);
            diff += (f - r).abs();
            ref_rest -= r;
            emp_rest -= f;
        }
        0.5 * (diff + (emp_rest - ref_rest).abs())
    });
    Ok(DistributionTable {
        rows,
        total_trials: trials,
        modulus: a,
        model: model.label(),
        seed,
        reference: reference.map(LimitDistribution::label),
        reference_kind: reference.map(|_| "exact below exponent a".to_string()),
        tv_distance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMode {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlternatingFormReport {
    pub modulus: u64,
    pub n: usize,
    pub m: usize,
    /// Minimal number of generators of `coker C`.
    pub generators: usize,
    pub mode: CheckMode,
    pub probability: f64,
    pub stderr: f64,
    /// Matrices enumerated (exact) or sampled.
    pub samples: u64,
    pub target: f64,
    pub bound: f64,
    /// Set when `a` is not prime.
    pub exploratory: bool,
    pub pass: bool,
}

fn form_matches(c: &[u64], s: &[u64], mm: &[u64], n: usize, m: usize, a: u64) -> bool {
    // (M^T C M)_{kl} for k < l
    let mut cm = vec![0u64; n * m];
    for i in 0..n {
        for l in 0..m {
            let mut acc = 0u64;
            for j in 0..n {
                acc = (acc + c[i * n + j] * mm[j * m + l]) % a;
            }
            cm[i * m + l] = acc;
        }
    }
    for k in 0..m {
        for l in k + 1..m {
            let mut acc = 0u64;
            for i in 0..n {
                acc = (acc + mm[i * m + k] * cm[i * m + l]) % a;
            }
            if acc != s[k * m + l] {
                return false;
            }
        }
    }
    true
}

fn small_entries(x: &ExactMatrix) -> Vec<u64> {
    x.entries().iter().map(|v| v.to_u64().expect("reduced entries")).collect()
}

/// Estimate `P[M^T C M = S]` for uniform `n x m` matrices `M` over
/// `Z/aZ` and compare with `a^{-m(m-1)/2}` at tolerance `2^{m+g+1-n}`.
pub fn verify_alternating_form_bound(
    c: &ExactMatrix,
    s: &ExactMatrix,
    mode: CheckMode,
    trials: u64,
    seed: SeedSpec,
) -> Result<AlternatingFormReport> {
    let a = c.modulus();
    if a < 2 {
        return Err(Error::InvalidArgument("the ring must be Z/aZ with a >= 2".into()));
    }
    if s.modulus() != a {
        return Err(Error::Modulus {
            expected: a,
            found: s.modulus(),
        });
    }
    if !c.is_square() || !s.is_square() || !c.is_alternating() || !s.is_alternating() {
        return Err(Error::NotAlternating);
    }
    let (n, m) = (c.rows(), s.rows());
    let g = c.min_generators_cokernel()?;
    let (cs, ss) = (small_entries(c), small_entries(s));
    let pairs = (m * m.saturating_sub(1) / 2) as i32;
    let target = (a as f64).powi(-pairs);
    let bound = 2f64.powi(m as i32 + g as i32 + 1 - n as i32);
    let (probability, stderr, samples) = match mode {
        CheckMode::Exact => {
            let total = (0..n * m)
                .try_fold(1u64, |acc, _| acc.checked_mul(a).filter(|&t| t <= FORM_ENUMERATION_BOUND))
                .ok_or_else(|| Error::BoundExceeded {
                    what: "alternating form enumeration",
                    needed: format!("{a}^{}", n * m),
                    limit: FORM_ENUMERATION_BOUND.to_string(),
                })?;
            let chunks = crate::stats::map_trials(total.div_ceil(1 << 12), |chunk| {
                let mut hits = 0u64;
                let mut mm = vec![0u64; n * m];
                for code in chunk << 12..((chunk + 1) << 12).min(total) {
                    let mut x = code;
                    for v in mm.iter_mut() {
                        *v = x % a;
                        x /= a;
                    }
                    hits += form_matches(&cs, &ss, &mm, n, m, a) as u64;
                }
                hits
            });
            (chunks.iter().sum::<u64>() as f64 / total as f64, 0.0, total)
        }
        CheckMode::MonteCarlo => {
            if trials == 0 {
                return Err(Error::InvalidArgument("trials must be positive".into()));
            }
            let t = crate::stats::tally_trials(trials, |t| {
                let sd = seed.trial(t);
                let mm: Vec<u64> = (0..n * m).map(|k| sd.below(k / m, k % m, 0, a)).collect();
                form_matches(&cs, &ss, &mm, n, m, a) as u8 as f64
            });
            (t.mean(), t.stderr(), trials)
        }
    };
    let pass = (probability - target).abs() <= bound + SIGMAS * stderr;
    Ok(AlternatingFormReport {
        modulus: a,
        n,
        m,
        generators: g,
        mode,
        probability,
        stderr,
        samples,
        target,
        bound,
        exploratory: !is_prime(a),
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub modulus: u64,
    pub ell: usize,
    pub k: usize,
    pub failure_rate: f64,
    pub stderr: f64,
    pub trials: u64,
    /// `2^{ell-k}`.
    pub bound: f64,
    /// `1 - ∏_{p | a} ∏_{i<ell} (1 - p^{i-k})`.
    pub exact_failure: f64,
    pub pass: bool,
}

/// Probability that `k` uniform vectors of `(Z/aZ)^ell` generate it,
/// through reduction at each prime dividing `a`.
pub fn generation_probability(a: u64, ell: usize, k: usize) -> f64 {
    prime_factors(a)
        .into_iter()
        .map(|p| (0..ell).map(|i| 1.0 - (p as f64).powi(i as i32 - k as i32)).product::<f64>())
        .product()
}

/// Failure rate of `k` uniform vectors to generate `(Z/aZ)^ell`, against
/// the bound `2^{ell-k}`.
pub fn verify_generation_bound(a: u64, ell: usize, k: usize, trials: u64, seed: SeedSpec) -> Result<GenerationReport> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if a < 2 {
        return Err(Error::InvalidArgument("the ring must be Z/aZ with a >= 2".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let moduli = vec![a; ell];
    let t = crate::stats::tally_trials(trials, |t| {
        let sd = seed.trial(t);
        let cols: Vec<Vec<u64>> = (0..k).map(|j| (0..ell).map(|i| sd.below(i, j, 0, a)).collect()).collect();
        (column_span_index(&moduli, &cols) != BigUint::from(1u32)) as u8 as f64
    });
    let bound = 2f64.powi(ell as i32 - k as i32);
    Ok(GenerationReport {
        modulus: a,
        ell,
        k,
        failure_rate: t.mean(),
        stderr: t.stderr(),
        trials,
        bound,
        exact_failure: 1.0 - generation_probability(a, ell, k),
        pass: t.mean() <= bound + SIGMAS * t.stderr(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalScenario {
    pub name: String,
    pub estimate: MomentEstimate,
    /// Moment value the estimate must stay strictly above.
    pub lower: Option<f64>,
    /// Moment value the estimate must stay strictly below.
    pub upper: Option<f64>,
    /// Value the estimate must agree with instead of separating from.
    pub agree: Option<f64>,
    /// Large-`n` moment predicted from the exact isotropy probability.
    pub predicted: Option<f64>,
    pub pass: bool,
}

impl DirectionalScenario {
    fn judge(name: &str, estimate: MomentEstimate, lower: Option<f64>, upper: Option<f64>, agree: Option<f64>, predicted: Option<f64>) -> Self {
        let margin = SIGMAS * estimate.stderr;
        let pass = lower.is_none_or(|l| estimate.mean - margin > l)
            && upper.is_none_or(|u| estimate.mean + margin < u)
            && agree.is_none_or(|v| estimate.agrees_with(v, SIGMAS));
        Self {
            name: name.into(),
            estimate,
            lower,
            upper,
            agree,
            predicted,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalReport {
    pub n: usize,
    pub trials: u64,
    pub scenarios: Vec<DirectionalScenario>,
    pub pass: bool,
}

/// Fixed scenarios showing that a bounded-rank form keeps the moment away
/// from both universal values:
/// a rank-2 form over `Z/2` puts the `(Z/2)^2` moment strictly between 1 and 2;
/// the symmetric model keeps it strictly above `|∧^2 G[1]| = 1`;
/// a full-rank form brings the `(Z/2)^2` moment back to 1.
pub fn directional_checks(n: usize, trials: u64, seed: SeedSpec) -> Result<DirectionalReport> {
    if n < 4 {
        return Err(Error::InvalidArgument("directional checks need n >= 4".into()));
    }
    let klein: FiniteAbelianGroup = "2,2".parse()?;
    let wedge = |g: &FiniteAbelianGroup| -> Result<f64> { Ok(g.exterior_square_order()?.to_f64().unwrap_or(f64::INFINITY)) };
    let iso = isotropy_probability_exact(&standard_alternating(4, 2, 2), &klein, 2)?;
    let predicted = wedge(&klein)? * iso.to_f64().unwrap_or(f64::NAN);

    let rank2 = MatrixModel::c_symmetric(standard_alternating(n, 2, 2))?;
    let symmetric = MatrixModel::symmetric(n, 2)?;
    let full = MatrixModel::c_symmetric(standard_alternating(n, n, 2))?;

    let run = |model: &MatrixModel, g: &FiniteAbelianGroup, stream: u64| {
        empirical_moment(model, g, trials, SeedSpec::new(seed.base_seed, seed.stream_index.wrapping_add(stream)))
    };
    let scenarios = vec![
        DirectionalScenario::judge(
            "rank-2 form, G = (Z/2)^2: strictly between 1 and 2",
            run(&rank2, &klein, 0)?,
            Some(1.0),
            Some(wedge(&klein)?),
            None,
            Some(predicted),
        ),
        DirectionalScenario::judge(
            "symmetric, h = 1, G = (Z/2)^2: strictly above |∧²G[1]| = 1",
            run(&symmetric, &klein, 1)?,
            Some(1.0),
            None,
            None,
            Some(wedge(&klein)?),
        ),
        DirectionalScenario::judge(
            "full-rank form, G = (Z/2)^2: agrees with |∧²G[1]| = 1",
            run(&full, &klein, 2)?,
            None,
            None,
            Some(1.0),
            Some(1.0),
        ),
    ];
    let pass = scenarios.iter().all(|s| s.pass);
    Ok(DirectionalReport {
        n,
        trials,
        scenarios,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub target: f64,
    pub sizes: Vec<usize>,
    pub estimates: Vec<MomentEstimate>,
    pub gaps: Vec<f64>,
    /// Each gap is at most the previous one plus the combined margin.
    pub shrinking: bool,
}

/// Moment estimates along a sequence of models of growing size, with the
/// gaps to `target`.
pub fn moment_trend(
    models: &[MatrixModel],
    g: &FiniteAbelianGroup,
    target: f64,
    trials: u64,
    seed: SeedSpec,
) -> Result<TrendReport> {
    let estimates = models
        .iter()
        .enumerate()
        .map(|(i, m)| empirical_moment(m, g, trials, SeedSpec::new(seed.base_seed, seed.stream_index.wrapping_add(i as u64))))
        .collect::<Result<Vec<_>>>()?;
    let gaps: Vec<f64> = estimates.iter().map(|e| (e.mean - target).abs()).collect();
    let shrinking = estimates.windows(2).zip(gaps.windows(2)).all(|(e, d)| {
        d[1] <= d[0] + SIGMAS * (e[0].stderr.powi(2) + e[1].stderr.powi(2)).sqrt()
    });
    Ok(TrendReport {
        target,
        sizes: models.iter().map(MatrixModel::rows).collect(),
        estimates,
        gaps,
        shrinking,
    })
}
