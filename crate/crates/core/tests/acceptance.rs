//! Acceptance suite: one line per criterion, exit status 1 if any fails.
//!
//! Run with `cargo test -p cokernels --test acceptance`.

use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use cokernels::group::{count_hom, count_sur, enumerate_subgroups, groups_with_exponent_dividing};
use cokernels::harness::{
    directional_checks, empirical_distribution, empirical_moments, exact_reference_classes,
    moment_sum_oracle_groups, verify_alternating_form_bound, CheckMode, SIGMAS,
};
use cokernels::isotropy::{
    build_witness, check_smith_isotropy, check_level_forms, exhaustive_witness, isotropy_probability_exact,
    isotropy_probability_mc, GroupMap,
};
use cokernels::limits::{cl_probability, LimitDistribution};
use cokernels::models::{disjoint_positions, standard_alternating, MatrixModel};
use cokernels::{cokernel, smith_normal_form, ExactMatrix, FiniteAbelianGroup, SeedSpec};

const N: usize = 40;
const TRIALS: u64 = 20_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn g(s: &str) -> FiniteAbelianGroup {
    s.parse().unwrap()
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn random_alternating(n: usize, a: u64, seed: &SeedSpec) -> ExactMatrix {
    let mut c = ExactMatrix::zeros(n, n, a).unwrap();
    for i in 0..n {
        for j in i + 1..n {
            let v = seed.below(i, j, 0, a) as i64;
            c.set(i, j, BigInt::from(v));
            c.set(j, i, BigInt::from(-v));
        }
    }
    c.reduce_mod(a).unwrap()
}

fn random_surjection(target: &FiniteAbelianGroup, n: usize, a: u64, seed: &SeedSpec) -> GroupMap {
    (0..)
        .map(|attempt| GroupMap::random(target, n, a, &seed.trial(attempt)).unwrap())
        .find(GroupMap::is_surjective)
        .unwrap()
}

/// Level-form check, Smith-coordinate check and exhaustive witness
/// search agree on every sampled case.
fn criterion_1() -> Outcome {
    let forms_per_cell = 500;
    let mut cases = 0u64;
    let mut cells = 0;
    for n in 1..=4 {
        for a in [2u64, 3, 4] {
            for target in groups_with_exponent_dividing(a, 16) {
                if target.num_generators() > n {
                    continue;
                }
                cells += 1;
                let base = SeedSpec::new(0xC1 + a, (n as u64) << 32 | cells);
                for t in 0..forms_per_cell {
                    let s = base.trial(t);
                    let c = random_alternating(n, a, &s.trial(0));
                    let f = random_surjection(&target, n, a, &s.trial(1));
                    let by_levels = check_level_forms(&f, &c).unwrap();
                    let by_smith = check_smith_isotropy(&f, &c).unwrap();
                    let found = exhaustive_witness(&f, &c).unwrap().is_some();
                    let built = build_witness(&f, &c).is_ok();
                    if by_levels != by_smith || by_levels != found || by_levels != built {
                        return outcome(
                            false,
                            format!("disagreement at n={n}, a={a}, G={target}, seed={s:?}: levels={by_levels} smith={by_smith} search={found} witness={built}"),
                        );
                    }
                    cases += 1;
                }
            }
        }
    }
    outcome(true, format!("{cases} cases over {cells} cells, all three checks agree"))
}

/// Exact isotropy probability onto `(Z/p)^2` equals `1/p + p^{-c}(1 - 1/p)`.
fn criterion_2() -> Outcome {
    let mut checked = 0;
    for p in [2u64, 3] {
        let klein = FiniteAbelianGroup::from_factors([p, p], 0);
        for n in 1..=5 {
            for c in (0..=n).step_by(2) {
                let form = standard_alternating(n, c, p);
                let got = isotropy_probability_exact(&form, &klein, p).unwrap();
                let pp = p as i64;
                let expect = rat(1, pp) + rat(1, pp.pow(c as u32)) * (BigRational::one() - rat(1, pp));
                if got != expect {
                    return outcome(false, format!("p={p}, n={n}, c={c}: got {got}, expected {expect}"));
                }
                checked += 1;
            }
        }
    }
    let worked = isotropy_probability_exact(&standard_alternating(2, 2, 2), &g("2,2"), 2).unwrap();
    let pass = worked == rat(10, 16);
    outcome(pass, format!("{checked} exact rational equalities; p=2, n=2, c=2 gives {worked}"))
}

fn moment_line(label: &str, est: &cokernels::stats::MomentEstimate, target: f64) -> (bool, String) {
    let ok = est.agrees_with(target, SIGMAS);
    (
        ok,
        format!("{label} {:.4}±{:.4} (target {target})", est.mean, est.stderr),
    )
}

fn timed_moments(model: &MatrixModel, groups: &[FiniteAbelianGroup], seed: SeedSpec) -> (Vec<cokernels::stats::MomentEstimate>, f64) {
    let start = Instant::now();
    let est = empirical_moments(model, groups, TRIALS, seed).unwrap();
    (est, start.elapsed().as_secs_f64())
}

/// iid and symmetric moments at n = 40 over Z/4.
fn criterion_3() -> Outcome {
    let mut pass = true;
    let mut parts = vec![];
    let iid = MatrixModel::iid(N, N, 4).unwrap();
    let groups = [g("2"), g("2,2"), g("4")];
    let (est, secs) = timed_moments(&iid, &groups, SeedSpec::new(3, 0));
    for (e, grp) in est.iter().zip(&groups) {
        let (ok, s) = moment_line(&format!("iid {grp}"), e, 1.0);
        pass &= ok;
        parts.push(s);
    }
    pass &= secs < 300.0;
    let sym = MatrixModel::symmetric(N, 4).unwrap();
    let groups = [g("2,2"), g("2")];
    let (est, secs2) = timed_moments(&sym, &groups, SeedSpec::new(3, 1));
    for (e, (grp, target)) in est.iter().zip(groups.iter().zip([2.0, 1.0])) {
        let (ok, s) = moment_line(&format!("symmetric {grp}"), e, target);
        pass &= ok;
        parts.push(s);
    }
    pass &= secs2 < 300.0;
    parts.push(format!("{secs:.1}s + {secs2:.1}s"));
    outcome(pass, parts.join("; "))
}

/// C-symmetric moments equal `|∧²G[h]|`.
fn criterion_4() -> Outcome {
    let mut pass = true;
    let mut parts = vec![];
    let klein = g("2,2");
    let full = MatrixModel::c_symmetric(standard_alternating(N, N, 4)).unwrap();
    let (est, _) = timed_moments(&full, std::slice::from_ref(&klein), SeedSpec::new(4, 0));
    let (ok, s) = moment_line("full-rank C, (Z/2)^2", &est[0], 1.0);
    pass &= ok;
    parts.push(s);

    let corner = MatrixModel::corner_perturbed(N, disjoint_positions(10), vec![1; 10], 4).unwrap();
    let (est, _) = timed_moments(&corner, std::slice::from_ref(&klein), SeedSpec::new(4, 1));
    let (ok, s) = moment_line("corner k=10, (Z/2)^2", &est[0], 1.0);
    pass &= ok;
    parts.push(s);

    let z4sq = g("4,4");
    let target = z4sq
        .torsion_of_order_dividing(2)
        .exterior_square_order()
        .unwrap()
        .to_f64()
        .unwrap();
    let two_c = standard_alternating(N, N, 4).scale(2).reduce_mod(4).unwrap();
    let model = MatrixModel::c_symmetric(two_c).unwrap();
    let (est, _) = timed_moments(&model, std::slice::from_ref(&z4sq), SeedSpec::new(4, 2));
    let (ok, s) = moment_line("C = 2·full over Z/4, (Z/4)^2", &est[0], target);
    pass &= ok;
    parts.push(s);
    outcome(pass, parts.join("; "))
}

/// `|P_iso - 1/2|` shrinks over n = 4, 8, 16 and is tiny at n = 16.
fn criterion_5() -> Outcome {
    let klein = g("2,2");
    let half = rat(1, 2);
    let mut gaps = vec![];
    for n in [4, 8, 16] {
        let p = isotropy_probability_exact(&standard_alternating(n, n, 2), &klein, 2).unwrap();
        gaps.push((&p - &half).abs());
    }
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    let small = gaps[2] <= rat(1, 256);
    let mc = isotropy_probability_mc(&standard_alternating(16, 16, 2), &klein, 2, 100_000, SeedSpec::new(5, 0)).unwrap();
    let exact16 = 0.5 + gaps[2].to_f64().unwrap();
    let mc_ok = mc.agrees_with(exact16, SIGMAS) && (mc.mean - 0.5).abs() <= 1.0 / 256.0 + SIGMAS * mc.stderr;
    outcome(
        monotone && small && mc_ok,
        format!(
            "gaps {} > {} > {}; Monte Carlo at n=16: {:.5}±{:.5}",
            gaps[0], gaps[1], gaps[2], mc.mean, mc.stderr
        ),
    )
}

/// Random alternating form bound: exact cell over Z/2 and Monte Carlo cells over Z/3.
fn criterion_6() -> Outcome {
    let mut parts = vec![];
    let c = standard_alternating(8, 8, 2);
    let s = ExactMatrix::zeros(2, 2, 2).unwrap();
    let r = verify_alternating_form_bound(&c, &s, CheckMode::Exact, 0, SeedSpec::new(6, 0)).unwrap();
    let mut pass = r.generators == 0 && (r.probability - 0.5).abs() <= 1.0 / 32.0 && r.pass;
    parts.push(format!("exact a=2 n=8 m=2: P={} (|P-1/2| <= 2^-5)", r.probability));
    let form = standard_alternating(10, 10, 3);
    let targets = [
        ExactMatrix::zeros(3, 3, 3).unwrap(),
        standard_alternating(3, 2, 3),
        ExactMatrix::from_rows(&[[0, 1, 2], [2, 0, 1], [1, 2, 0]], 3).unwrap(),
    ];
    for (i, s) in targets.iter().enumerate() {
        let r = verify_alternating_form_bound(&form, s, CheckMode::MonteCarlo, 100_000, SeedSpec::new(6, 1 + i as u64)).unwrap();
        pass &= r.pass;
        parts.push(format!("MC a=3 n=10 m=3 S#{i}: {:.5}±{:.5} vs {:.5} (bound {:.5})", r.probability, r.stderr, r.target, r.bound));
    }
    outcome(pass, parts.join("; "))
}

fn oracle_models(n: usize, a: u64) -> Vec<MatrixModel> {
    let p = cokernels::group::prime_factors(a)[0];
    let corners = n / 2;
    vec![
        MatrixModel::iid(n, n, a).unwrap(),
        MatrixModel::symmetric(n, a).unwrap(),
        MatrixModel::c_symmetric(standard_alternating(n, n, a)).unwrap(),
        MatrixModel::symmetric_mod_h(n, a / p, a).unwrap(),
        MatrixModel::corner_perturbed(n, disjoint_positions(corners), vec![1; corners], a).unwrap(),
    ]
}

/// `E #Sur = Σ_F P[F∘X = 0]` exactly on every tractable cell.
fn criterion_7() -> Outcome {
    let mut cells = 0;
    let mut skipped = 0;
    for n in 1..=3 {
        for a in [2u64, 3, 4] {
            for model in oracle_models(n, a) {
                let mut groups: Vec<FiniteAbelianGroup> = groups_with_exponent_dividing(a, 16)
                    .into_iter()
                    .filter(|h| h.num_generators() <= n)
                    .collect();
                // drop groups whose map enumeration is out of reach
                let support = model.support_size().unwrap();
                groups.retain(|h| {
                    let homs = h.order().unwrap().to_u64().unwrap().saturating_pow(n as u32);
                    let ok = support.saturating_mul(homs) <= cokernels::harness::ORACLE_WORK_BOUND;
                    skipped += !ok as usize;
                    ok
                });
                for cell in moment_sum_oracle_groups(&model, &groups).unwrap() {
                    if !cell.holds() {
                        return outcome(
                            false,
                            format!("{} with G={}: {} != {}", model.label(), cell.group, cell.lhs, cell.rhs),
                        );
                    }
                    cells += 1;
                }
            }
        }
    }
    outcome(true, format!("{cells} cells equal exactly ({skipped} beyond the work bound)"))
}

/// Cokernel class frequencies against the sandpile and Cohen-Lenstra tables.
fn criterion_8() -> Outcome {
    let mut pass = true;
    let mut parts = vec![];
    let a = 8;
    let sandpile = LimitDistribution::sandpile(2).unwrap();
    let sym = MatrixModel::symmetric(N, a).unwrap();
    let table = empirical_distribution(&sym, a, TRIALS, SeedSpec::new(8, 0), Some(&sandpile)).unwrap();
    for (h, r) in exact_reference_classes(&sandpile, a).unwrap().into_iter().take(3) {
        let f = table.frequency(&h);
        let se = (r * (1.0 - r) / TRIALS as f64).sqrt();
        let ok = (f - r).abs() <= SIGMAS * se;
        pass &= ok;
        parts.push(format!("sandpile {h}: {f:.4} vs {r:.4}"));
    }
    let cl = LimitDistribution::cohen_lenstra(2, 0).unwrap();
    let csym = MatrixModel::c_symmetric(standard_alternating(N, N, a)).unwrap();
    let table = empirical_distribution(&csym, a, TRIALS, SeedSpec::new(8, 1), Some(&cl)).unwrap();
    for h in [FiniteAbelianGroup::trivial(), g("2")] {
        let r = cl_probability(&h, 2, 0).unwrap().value;
        let f = table.frequency(&h);
        let se = (r * (1.0 - r) / TRIALS as f64).sqrt();
        pass &= (f - r).abs() <= SIGMAS * se;
        parts.push(format!("CL {h}: {f:.4} vs {r:.4}"));
    }
    outcome(pass, parts.join("; "))
}

/// Strict separation for bounded-rank forms.
fn criterion_9() -> Outcome {
    let r = directional_checks(N, TRIALS, SeedSpec::new(9, 0)).unwrap();
    let parts: Vec<String> = r
        .scenarios
        .iter()
        .map(|s| {
            format!(
                "{} {:.4}±{:.4}{}",
                if s.pass { "ok" } else { "FAILED" },
                s.estimate.mean,
                s.estimate.stderr,
                s.predicted.map_or(String::new(), |p| format!(" (predicted {p})"))
            )
        })
        .collect();
    outcome(r.pass, parts.join("; "))
}

fn small_matrix(max_n: usize, max_entry: i64) -> impl Strategy<Value = Vec<Vec<i64>>> {
    (1..=max_n, 1..=max_n).prop_flat_map(move |(r, c)| {
        prop::collection::vec(prop::collection::vec(-max_entry..=max_entry, c), r)
    })
}

fn square_matrix(max_n: usize, max_entry: i64) -> impl Strategy<Value = Vec<Vec<i64>>> {
    (1..=max_n).prop_flat_map(move |n| prop::collection::vec(prop::collection::vec(-max_entry..=max_entry, n), n))
}

fn cofactor_det(m: &[Vec<i64>]) -> BigInt {
    let n = m.len();
    if n == 1 {
        return BigInt::from(m[0][0]);
    }
    (0..n)
        .map(|j| {
            let minor: Vec<Vec<i64>> = m[1..]
                .iter()
                .map(|row| row.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &x)| x).collect())
                .collect();
            let term = BigInt::from(m[0][j]) * cofactor_det(&minor);
            if j % 2 == 0 {
                term
            } else {
                -term
            }
        })
        .sum()
}

fn small_group() -> impl Strategy<Value = FiniteAbelianGroup> {
    prop::sample::select(groups_with_exponent_dividing(12, 48).into_iter().chain(groups_with_exponent_dividing(8, 64)).collect::<Vec<_>>())
}

/// Library property suites at 10^4 cases each.
fn criterion_10() -> Outcome {
    let cases = 10_000;
    let runner = || {
        TestRunner::new(Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        })
    };
    let mut failures = vec![];
    let snf = runner().run(&small_matrix(6, 50), |rows| {
        let m = ExactMatrix::from_rows(&rows, 0).unwrap();
        let s = smith_normal_form(&m, true).unwrap();
        let (u, v) = (s.u.as_ref().unwrap(), s.v.as_ref().unwrap());
        prop_assert_eq!(&u.mul(&m).unwrap().mul(v).unwrap(), &s.d);
        let f = &s.invariant_factors;
        prop_assert!(f
            .windows(2)
            .all(|w| w[1].is_zero() || (!w[0].is_zero() && (&w[1] % &w[0]).is_zero())));
        prop_assert!(f.iter().all(|x| !x.is_negative()));
        Ok(())
    });
    if let Err(e) = snf {
        failures.push(format!("SNF round-trip: {e}"));
    }
    let det = runner().run(&square_matrix(5, 20), |rows| {
        let m = ExactMatrix::from_rows(&rows, 0).unwrap();
        let d = cofactor_det(&rows);
        let coker = cokernel(&m).unwrap();
        if d.is_zero() {
            prop_assert!(coker.free_rank() > 0);
        } else {
            prop_assert_eq!(BigInt::from(coker.order().unwrap()), d.abs());
        }
        Ok(())
    });
    if let Err(e) = det {
        failures.push(format!("order = |det|: {e}"));
    }
    let sum = runner().run(&(small_group(), small_group()), |(src, h)| {
        let mut total = BigUint::zero();
        for k in enumerate_subgroups(&h).unwrap() {
            total += count_sur(&src, &k.iso_type).unwrap();
        }
        prop_assert_eq!(total, count_hom(&src, &h).unwrap());
        Ok(())
    });
    if let Err(e) = sum {
        failures.push(format!("subgroup sum: {e}"));
    }
    let aut = runner().run(&small_group(), |h| {
        prop_assert_eq!(count_sur(&h, &h).unwrap(), h.aut_order().unwrap());
        Ok(())
    });
    if let Err(e) = aut {
        failures.push(format!("Sur(G,G) = |Aut G|: {e}"));
    }
    if failures.is_empty() {
        outcome(true, format!("4 property suites x {cases} cases"))
    } else {
        outcome(false, failures.join("; "))
    }
}

fn main() {
    let only: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let criteria: [(usize, &str, fn() -> Outcome); 10] = [
        (1, "isotropy criteria agree on the small grid", criterion_1),
        (2, "isotropy probability closed form for rank-2 targets", criterion_2),
        (3, "iid and symmetric moments at desk scale", criterion_3),
        (4, "C-symmetric moments equal |∧²G[h]|", criterion_4),
        (5, "isotropy probability gap shrinks", criterion_5),
        (6, "random alternating form bound", criterion_6),
        (7, "moment-sum identity on all tractable cells", criterion_7),
        (8, "cokernel distribution against limit tables", criterion_8),
        (9, "directional separation", criterion_9),
        (10, "library property suites", criterion_10),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        failed += !o.pass as usize;
        println!(
            "[{}] criterion {id}: {name} ({:.1}s) - {}",
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
