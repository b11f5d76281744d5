use cokernels::group::{count_hom, count_sur, enumerate_subgroups, groups_with_exponent_dividing};
use cokernels::harness::{empirical_distribution, sample_cokernel};
use cokernels::isotropy::{check_smith_isotropy, check_level_forms, isotropy_report, GroupMap};
use cokernels::models::{disjoint_positions, standard_alternating};
use cokernels::{cokernel, cokernel_mod, ExactMatrix, FiniteAbelianGroup, MatrixModel, SeedSpec};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn group_strategy() -> impl Strategy<Value = FiniteAbelianGroup> {
    (prop::collection::vec(1u64..=12, 0..4), 0usize..2)
        .prop_map(|(factors, free)| FiniteAbelianGroup::from_factors(factors, free))
}

fn matrix_strategy(max_n: usize, max_entry: i64) -> impl Strategy<Value = (usize, usize, Vec<i64>)> {
    (1..=max_n, 1..=max_n).prop_flat_map(move |(r, c)| {
        (Just(r), Just(c), prop::collection::vec(-max_entry..=max_entry, r * c))
    })
}

fn from_flat(r: usize, c: usize, data: &[i64], modulus: u64) -> ExactMatrix {
    let rows: Vec<Vec<i64>> = data.chunks(c).map(<[i64]>::to_vec).collect();
    assert_eq!(rows.len(), r);
    ExactMatrix::from_rows(&rows, modulus).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn group_literal_round_trips(g in group_strategy()) {
        let text = g.to_string();
        let back: FiniteAbelianGroup = text.parse().unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn modular_cokernel_matches_stacked_integer_system(
        (r, c, data) in matrix_strategy(4, 30),
        a in 2u64..=12,
    ) {
        let m = from_flat(r, c, &data, a);
        let mut stacked = vec![vec![0i64; c + r]; r];
        for i in 0..r {
            for j in 0..c {
                stacked[i][j] = data[i * c + j];
            }
            stacked[i][c + i] = a as i64;
        }
        let expected = cokernel(&ExactMatrix::from_rows(&stacked, 0).unwrap()).unwrap();
        let got = cokernel_mod(&m).unwrap();
        prop_assert_eq!(&got, &expected);
        let e = got.exponent().unwrap();
        prop_assert!((BigInt::from(a) % BigInt::from(e)).is_zero());
    }

    #[test]
    fn cokernel_order_is_index_of_column_span((n, _, data) in matrix_strategy(4, 9).prop_filter("square", |(r, c, _)| r == c)) {
        let m = from_flat(n, n, &data, 0);
        let g = cokernel(&m).unwrap();
        let snf = cokernels::smith_normal_form(&m, false).unwrap();
        if snf.rank == n {
            let product: BigInt = snf.invariant_factors.iter().product();
            prop_assert_eq!(g.order().unwrap(), product.magnitude().clone());
        } else {
            prop_assert_eq!(g.free_rank(), n - snf.rank);
        }
    }

    #[test]
    fn tensor_then_sylow_commute(g in group_strategy(), a in 2u64..=12) {
        let finite = FiniteAbelianGroup::from_factors(g.divisors().to_vec(), 0);
        let t = finite.tensor_mod(a);
        for p in [2u64, 3, 5] {
            prop_assert_eq!(t.sylow(p).unwrap(), finite.sylow(p).unwrap().tensor_mod(a));
        }
        prop_assert!((BigInt::from(a) % BigInt::from(t.exponent().unwrap())).is_zero());
    }

    #[test]
    fn sur_never_exceeds_hom(g in group_strategy(), h in group_strategy()) {
        let h = FiniteAbelianGroup::from_factors(h.divisors().to_vec(), 0);
        prop_assume!(h.order().unwrap() <= 64u32.into());
        prop_assert!(count_sur(&g, &h).unwrap() <= count_hom(&g, &h).unwrap());
    }

    #[test]
    fn c_symmetric_samples_have_the_form(n in 2usize..7, rank_half in 0usize..4, a in 2u64..=6, seed in any::<u64>()) {
        let c = standard_alternating(n, (2 * rank_half).min(n - n % 2), a);
        let model = MatrixModel::c_symmetric(c.clone()).unwrap();
        let x = model.sample(&SeedSpec::new(seed, 0));
        prop_assert_eq!(x.sub(&x.transpose()).unwrap(), c);
        prop_assert_eq!(x, model.sample(&SeedSpec::new(seed, 0)));
    }

    #[test]
    fn corner_perturbed_difference_has_2k_entries(n in 4usize..9, a in 3u64..=7, seed in any::<u64>()) {
        let k = n / 2;
        let model = MatrixModel::corner_perturbed(n, disjoint_positions(k), vec![1; k], a).unwrap();
        let x = model.sample(&SeedSpec::new(seed, 1));
        let d = x.sub(&x.transpose()).unwrap();
        prop_assert_eq!(d.entries().iter().filter(|v| !v.is_zero()).count(), 2 * k);
        prop_assert!(d.is_alternating());
    }

    #[test]
    fn symmetric_mod_h_difference_divisible(n in 2usize..6, seed in any::<u64>()) {
        let model = MatrixModel::symmetric_mod_h(n, 2, 8).unwrap();
        let x = model.sample(&SeedSpec::new(seed, 2));
        let d = x.sub(&x.transpose()).unwrap();
        prop_assert!(d.entries().iter().all(|v: &BigInt| (v % 2u32).is_zero()));
    }

    #[test]
    fn isotropy_conditions_agree_on_surjections(
        n in 2usize..5,
        a in prop::sample::select(vec![2u64, 3, 4]),
        seed in any::<u64>(),
    ) {
        let s = SeedSpec::new(seed, 0);
        let mut c = ExactMatrix::zeros(n, n, a).unwrap();
        for i in 0..n {
            for j in i + 1..n {
                let v = s.below(i, j, 0, a) as i64;
                c.set(i, j, BigInt::from(v));
                c.set(j, i, BigInt::from((a as i64 - v) % a as i64));
            }
        }
        prop_assert!(c.is_alternating());
        let targets: Vec<_> = groups_with_exponent_dividing(a, 16)
            .into_iter()
            .filter(|g| g.num_generators() <= n)
            .collect();
        let g = &targets[(seed % targets.len() as u64) as usize];
        let f = GroupMap::random(g, n, a, &s.trial(1)).unwrap();
        let by_levels = check_level_forms(&f, &c).unwrap();
        if f.is_surjective() {
            prop_assert_eq!(by_levels, check_smith_isotropy(&f, &c).unwrap());
            let report = isotropy_report(&f, &c).unwrap();
            prop_assert_eq!(report.witness.is_some(), by_levels);
        }
    }
}

#[test]
fn support_enumeration_visits_each_matrix_once() {
    let model = MatrixModel::symmetric(2, 3).unwrap();
    let mut seen = std::collections::BTreeSet::new();
    let count = model
        .for_each_support_matrix(1 << 10, |x| {
            seen.insert(x.to_vec());
        })
        .unwrap();
    assert_eq!(count, 27);
    assert_eq!(seen.len(), 27);
    assert_eq!(model.support_size(), Some(27));
}

#[test]
fn support_enumeration_respects_bound() {
    let model = MatrixModel::iid(3, 3, 4).unwrap();
    assert!(model.for_each_support_matrix(1000, |_| {}).is_err());
}

#[test]
fn subgroup_types_cover_hom_count() {
    let g: FiniteAbelianGroup = "2,4".parse().unwrap();
    let h: FiniteAbelianGroup = "2,2".parse().unwrap();
    let total = enumerate_subgroups(&h)
        .unwrap()
        .iter()
        .map(|k| count_sur(&g, &k.iso_type).unwrap())
        .fold(num_bigint::BigUint::zero(), |acc, x| acc + x);
    assert_eq!(total, count_hom(&g, &h).unwrap());
}

#[test]
fn distribution_frequencies_sum_to_one_exactly() {
    let model = MatrixModel::iid(6, 6, 4).unwrap();
    let table = empirical_distribution(&model, 4, 777, SeedSpec::new(5, 0), None).unwrap();
    let sum: BigRational = table.exact_frequencies().into_iter().sum();
    assert!(sum.is_one());
    assert_eq!(table.rows.iter().map(|r| r.count).sum::<u64>(), 777);
}

#[test]
fn cokernel_samples_reproducible_across_calls() {
    let model = MatrixModel::symmetric(12, 0).unwrap();
    for t in 0..20 {
        let s = SeedSpec::new(99, 0).trial(t);
        assert_eq!(sample_cokernel(&model, &s).unwrap(), sample_cokernel(&model, &s).unwrap());
    }
}
