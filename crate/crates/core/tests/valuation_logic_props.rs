use num_traits::{One, Zero};
use proptest::prelude::*;
use slice_core::ast::{int, Rational, Value};
use slice_core::logic::{self, interpret, interpret_term, Assignment, Substitution, VarKind};
use slice_core::testkit::{free_pool, random_profile_in, ExprGen, ProfileClass};
use slice_core::translate::{translate_in, IteMode};
use slice_core::valuation::{random_valuation, MarkPolicy};

fn grid(n: i64) -> impl Strategy<Value = Rational> {
    (0..=n).prop_map(move |k| Rational::new(k.into(), n.into()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn valuations_are_normalized_additive_and_monotone(seed in any::<u64>(), a in grid(48), b in grid(48), c in grid(48)) {
        let v = random_valuation(seed, 6);
        let mut pts = [a, b, c];
        pts.sort();
        let [a, b, c] = pts;
        prop_assert!(v.value_between(&int(0), &int(1)).is_one());
        prop_assert_eq!(v.value_between(&a, &b) + v.value_between(&b, &c), v.value_between(&a, &c));
        prop_assert!(v.value_between(&a, &b) >= Rational::zero());
        prop_assert!(v.value_between(&a, &a).is_zero());
        prop_assert!(v.cdf(&a) <= v.cdf(&c));
    }

    #[test]
    fn mark_range_is_the_exact_preimage(seed in any::<u64>(), l in grid(24), t in grid(24)) {
        let v = random_valuation(seed, 6);
        let remaining = v.value_between(&l, &int(1));
        match v.mark_range(&l, &t) {
            None => prop_assert!(t > remaining),
            Some((lo, hi)) => {
                prop_assert!(t <= remaining);
                prop_assert!(l <= lo && lo <= hi && hi <= int(1));
                prop_assert_eq!(v.value_between(&l, &lo), t.clone());
                prop_assert_eq!(v.value_between(&l, &hi), t.clone());
                let eps = Rational::new(1.into(), 1_000_000.into());
                if lo > l {
                    prop_assert!(v.value_between(&l, &(&lo - &eps)) < t);
                }
                if hi < int(1) {
                    prop_assert!(v.value_between(&l, &(&hi + &eps)) > t);
                }
                for policy in [MarkPolicy::Leftmost, MarkPolicy::Rightmost, MarkPolicy::Offset(Rational::new(1.into(), 3.into()))] {
                    let r = v.mark_of(&l, &t, &policy).unwrap();
                    prop_assert!(lo <= r && r <= hi);
                }
            }
        }
    }

    // Evaluating a substituted term equals evaluating the original term with
    // each substituted variable bound to the value of its replacement.
    #[test]
    fn substitution_lemma(seed in any::<u64>(), depth in 1u32..5, ys in proptest::collection::vec(grid(8), 12)) {
        let e = ExprGen::new(seed, 2, true).expr(depth);
        let t = translate_in(0, &e, IteMode::Core, &free_pool());
        let profile = random_profile_in(ProfileClass::Gaps, seed, 2, 4);
        let half = Rational::new(1.into(), 2.into());
        let piece = |lo: Rational, hi: Rational| logic::interval(logic::constant(Value::Real(lo)), logic::constant(Value::Real(hi)));
        let sub = Substitution::new()
            .then("I", piece(int(0), half.clone()))
            .then("J", piece(half.clone(), int(1)))
            .then("m", logic::constant(Value::Real(Rational::new(1.into(), 4.into()))))
            .then("b", logic::constant(Value::Bool(seed % 2 == 0)));
        let mut plain = Assignment::new();
        for (i, y) in ys.iter().enumerate() {
            plain.insert(VarKind::Y(i + 1), Value::Real(y.clone()));
        }
        let mut extended = plain.clone();
        for (x, term) in sub.entries() {
            extended.insert(VarKind::X(x.clone()), interpret_term(term, &profile, &plain).unwrap());
        }
        prop_assert_eq!(
            interpret(&sub.apply(&t.side), &profile, &plain).ok(),
            interpret(&t.side, &profile, &extended).ok()
        );
        prop_assert_eq!(
            interpret_term(&sub.apply_term(&t.result), &profile, &plain).ok(),
            interpret_term(&t.result, &profile, &extended).ok()
        );
    }
}
