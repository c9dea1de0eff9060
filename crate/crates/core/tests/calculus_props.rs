mod common;

use common::*;
use hahnsolve::derivation::{spec_a, DkPrediction};
use hahnsolve::diffpoly::derivatives;
use hahnsolve::grid::{GridSet, Membership};
use hahnsolve::{Exponent, Series};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn script_t_is_nonnegative() {
    for (name, spec) in specs() {
        let rank = spec.rank();
        for k in 1..=rank {
            for n in 1..=3 {
                let t = spec.script_t(k, n).unwrap();
                let bound = Exponent::new((0..rank).map(|i| if i == 0 { q(2) } else { q(0) }).collect());
                for x in t.enumerate_below(&bound, 2_000).unwrap_or_default() {
                    assert!(!x.is_negative(), "{name}: {x} in T_{k} for n = {n}");
                }
                for l in (k + 1)..=rank {
                    let tl = Series::monomial(q(1), Exponent::unit(rank, l));
                    let mut cur = tl.clone();
                    for i in 1..=n {
                        cur = spec.derive(&cur, k).unwrap();
                        let ratio = cur.mul_monomial(&q(1), &-&Exponent::unit(rank, l));
                        for x in ratio.support() {
                            assert!(x.is_positive(), "{name}: D_{k}^{i} t_{l}/t_{l} has {x}");
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn predictions_on_spec_a() {
    let a = spec_a();
    for i in 1..=4 {
        let actual = a.dk_derivative_valuation(1, i).unwrap();
        match a.predicted_dk_derivative_valuation(1, i) {
            DkPrediction::Value(v) => assert_eq!(actual, Some(v)),
            DkPrediction::Zero => assert_eq!(actual, None),
            other => panic!("{other:?}"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn translate_neg_stays_nonnegative(gens in prop::collection::vec((1i64..6, 0i64..4), 1..3), beta in (0i64..12, -3i64..6)) {
        let gens: Vec<Exponent> = gens.into_iter().map(|(a, b)| e(&[a, b])).collect();
        let lat = GridSet::lattice(2, gens).unwrap();
        let beta = e(&[beta.0, beta.1]);
        prop_assume!(!beta.is_negative());
        let out = lat.translate_neg(&beta, 5_000).unwrap();
        for x in out.enumerate_below(&e(&[4, 0]), 5_000).unwrap_or_default() {
            prop_assert!(!x.is_negative(), "{}", x);
        }
    }

    #[test]
    fn infinitesimal_derivatives(seed in any::<u64>(), which in 0usize..3, n in 1usize..4) {
        let mut r = rng(seed);
        let (_, spec) = &specs()[which];
        let rank = spec.rank();
        let alpha = nonzero_exponent(&mut r, rank);
        let y = Series::monomial(q(1), alpha.clone());
        let ds = derivatives(spec, &y, 0, n).unwrap();
        let all_small = ds.iter().all(|d| d.v().unwrap().is_none_or(|v| v.is_positive()));
        prop_assert_eq!(all_small, alpha > spec.alpha0(n), "alpha {} alpha0 {}", alpha, spec.alpha0(n));
    }

    #[test]
    fn evaluation_support_bound_is_sound(seed in any::<u64>(), which in 0usize..3) {
        let mut r = rng(seed);
        let (_, spec) = &specs()[which];
        let rank = spec.rank();
        let order = r.gen_range(0..=2);
        let deriv = if order == 0 { 0 } else { r.gen_range(0..=rank) };
        let f = diff_poly(&mut r, rank, order, deriv);
        let k = r.gen_range(deriv.max(1)..=rank);
        let mut y = Series::zero(rank);
        for _ in 0..r.gen_range(1..=2) {
            let class = r.gen_range(k..=rank);
            let mut x = class_exponent(&mut r, rank, class);
            if x.is_negative() {
                x = -&x;
            }
            y = &y + &Series::monomial(nonzero_q(&mut r), x);
        }
        let bound = f.evaluation_support_bound(k, &GridSet::support_of(&y), spec);
        prop_assume!(bound.is_ok());
        let bound = bound.unwrap();
        let value = f.evaluate(&y, spec).unwrap();
        for x in value.support() {
            prop_assert_eq!(bound.member(x, 100_000), Membership::Yes, "{} of {} not in {}", x, value, bound);
        }
    }
}
