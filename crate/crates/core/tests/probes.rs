use std::path::PathBuf;

use slice_core::ast::{int, rat, Protocol, Value};
use slice_core::logic::and;
use slice_core::parser::parse_protocol;
use slice_core::testkit::{
    completeness_probe, completeness_probe_with, drop_mark_equalities, envy_check, find_envy, front_loaded,
    random_profile, sample_runs, sample_runs_sequential, soundness_probe, soundness_probe_sequential,
    soundness_probe_with, uniform_profile, PolicyChoice, ProfileClass, Sampling,
};
use slice_core::translate::{translate, ConstraintTriple, IteMode};
use slice_core::valuation::MarkPolicy;

fn load(name: &str) -> Protocol {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name);
    parse_protocol(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const ALL: [&str; 5] = [
    "cut_choose.slice",
    "surplus.slice",
    "selfridge_conway.slice",
    "selfridge_conway_surplus.slice",
    "waste_makes_haste.slice",
];

fn weakened(e: &slice_core::ast::Expr, m: IteMode) -> ConstraintTriple {
    let t = translate(0, e, m);
    ConstraintTriple {
        side: and(vec![drop_mark_equalities(&t.side)]),
        ..t
    }
}

#[test]
fn soundness_on_corpus_both_modes() {
    for name in ALL {
        let p = load(name);
        for mode in [IteMode::Core, IteMode::Impl] {
            let r = soundness_probe(&p, &Sampling::new(PolicyChoice::Mixed), mode, 40, 3);
            assert!(r.passed(), "{name} {mode:?}: {}", r.failure.unwrap());
            assert!(r.stuck.is_empty(), "{name} {mode:?}: {:?}", r.stuck[0]);
            assert_eq!(r.checked, 40);
        }
    }
}

#[test]
fn cut_choose_uniform_outcome() {
    let p = load("cut_choose.slice");
    let (v, _) =
        slice_core::interp::evaluate(&p, &uniform_profile(2), &[MarkPolicy::Leftmost, MarkPolicy::Leftmost]).unwrap();
    let (m, ok) = envy_check(&v, &uniform_profile(2)).unwrap();
    assert!(ok);
    assert_eq!(m.values, vec![vec![rat(1, 2), rat(1, 2)], vec![rat(1, 2), rat(1, 2)]]);
}

#[test]
fn cut_choose_grid_forces_half() {
    let p = load("cut_choose.slice");
    let r = completeness_probe(&p, &uniform_profile(2), 16).unwrap();
    assert!(r.passed(), "{}", r.failure.unwrap());
    assert_eq!(r.points, 17);
    assert_eq!(r.satisfying.len(), 1);
    assert_eq!(r.satisfying[0].0, vec![rat(1, 2)]);
}

#[test]
fn surplus_grid_marks() {
    let p = load("surplus.slice");
    let profile = vec![slice_core::valuation::PiecewiseValuation::uniform(), front_loaded()];
    let r = completeness_probe(&p, &profile, 16).unwrap();
    assert!(r.passed(), "{}", r.failure.unwrap());
    assert_eq!(r.satisfying.len(), 1);
    assert_eq!(r.satisfying[0].0, vec![rat(1, 2), rat(1, 4)]);
}

#[test]
fn weakened_translation_is_caught_only_by_completeness() {
    let p = load("cut_choose.slice");
    let s = soundness_probe_with(
        &p,
        &Sampling::new(PolicyChoice::All(MarkPolicy::Leftmost)),
        IteMode::Core,
        50,
        1,
        weakened,
    );
    assert!(s.passed());
    let c = completeness_probe_with(&p, &uniform_profile(2), 16, weakened).unwrap();
    assert!(!c.passed());
}

#[test]
fn sampled_runs_on_random_profiles() {
    for name in ALL {
        let p = load(name);
        let r = sample_runs(&p, &Sampling::new(PolicyChoice::Mixed), 200, 9);
        assert!(r.runtime_errors.is_empty(), "{name}: {:?}", r.runtime_errors.first());
        assert!(r.envious.is_empty(), "{name}: {:?}", r.envious.first());
        assert_eq!(r.envy_free, 200);
    }
}

#[test]
fn envy_verdict_ignores_row_scaling() {
    let p = load("surplus.slice");
    for seed in 0..50 {
        let profile = random_profile(seed, 2, 5);
        let Ok((v, _)) = slice_core::interp::evaluate(&p, &profile, &[MarkPolicy::Leftmost, MarkPolicy::Rightmost])
        else {
            continue;
        };
        let (m, ok) = envy_check(&v, &profile).unwrap();
        let scaled = m.rescale(&[int(3), rat(1, 7)]);
        assert_eq!(scaled.is_envy_free(), ok);
    }
    let whole = Value::Tuple(vec![
        Value::Interval(slice_core::ast::Interval::cake()),
        Value::Interval(slice_core::ast::Interval::new(int(0), int(0)).unwrap()),
    ]);
    let (m, _) = envy_check(&whole, &uniform_profile(2)).unwrap();
    assert_eq!(m.rescale(&[int(2), int(5)]).envious(), m.envious());
}

#[test]
fn soundness_holds_on_gapped_profiles_too() {
    let sampling = Sampling::new(PolicyChoice::Mixed).with_class(ProfileClass::Gaps);
    for name in ALL {
        let r = soundness_probe(&load(name), &sampling, IteMode::Core, 60, 17);
        assert!(r.passed(), "{name}: {}", r.failure.unwrap());
    }
}

// Zero-density stretches let a rightmost mark land past the piece it was
// taken from, so Selfridge-Conway can get stuck outside the positive class.
#[test]
fn selfridge_conway_sticks_on_gaps_with_rightmost_marks() {
    let p = load("selfridge_conway.slice");
    let sampling = Sampling::new(PolicyChoice::All(MarkPolicy::Rightmost)).with_class(ProfileClass::Gaps);
    let r = sample_runs(&p, &sampling, 300, 4);
    assert!(!r.runtime_errors.is_empty());
    assert!(r
        .runtime_errors
        .iter()
        .all(|(_, e)| matches!(e, slice_core::interp::RuntimeError::DivOutOfBounds { .. })));
    let left = Sampling::new(PolicyChoice::All(MarkPolicy::Leftmost)).with_class(ProfileClass::Gaps);
    assert!(sample_runs(&p, &left, 300, 4).runtime_errors.is_empty());
}

#[test]
fn parallel_and_sequential_sampling_agree() {
    let p = load("surplus.slice");
    let s = Sampling::new(PolicyChoice::Mixed);
    let a = sample_runs(&p, &s, 100, 2);
    let b = sample_runs_sequential(&p, &s, 100, 2);
    assert_eq!(a.envy_free, b.envy_free);
    assert_eq!(a.runtime_errors.len(), b.runtime_errors.len());
    let p = load("selfridge_conway.slice");
    let a = soundness_probe(&p, &s, IteMode::Impl, 30, 5);
    let b = soundness_probe_sequential(&p, &s, IteMode::Impl, 30, 5);
    assert_eq!((a.checked, a.passed()), (b.checked, b.passed()));
}

#[test]
fn mutants_envy_is_found_dynamically() {
    for name in ["mutants/broken_cut_choose.slice", "mutants/overlapping_surplus.slice"] {
        let p = load(name);
        let (profile, v, m) = find_envy(&p, &Sampling::new(PolicyChoice::Mixed), 500, 1).expect(name);
        assert!(!m.is_envy_free());
        assert!(!envy_check(&v, &profile).unwrap().1);
    }
}
