use proptest::prelude::*;
use slice_core::ast::{fv, Expr};
use slice_core::testkit::{free_pool, translation_facts, ExprGen};
use slice_core::translate::{translate_in, translate_literal, IteMode};
use slice_core::typecheck::TyCtx;

const MODES: [IteMode; 2] = [IteMode::Core, IteMode::Impl];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn fresh_variable_bookkeeping(seed in any::<u64>(), k in 0usize..5, depth in 1u32..6) {
        let e = ExprGen::new(seed, 2, true).expr(depth);
        for mode in MODES {
            let f = translation_facts(k, &e, mode, &free_pool());
            prop_assert!(f.counts_agree(), "{:?}", f);
            prop_assert!(f.ys_fill_window(), "{:?} is not y{}..=y{}", f.ys, k + 1, f.q);
        }
    }

    #[test]
    fn free_program_variables_survive_translation(seed in any::<u64>(), depth in 1u32..6) {
        let e = ExprGen::new(seed, 2, true).expr(depth);
        for mode in MODES {
            let f = translation_facts(0, &e, mode, &free_pool());
            prop_assert!(f.fv_included());
            if !f.dead_binding {
                prop_assert_eq!(f.fv_constraint, f.fv_expr);
            }
        }
    }

    #[test]
    fn closed_programs_have_closed_constraints(seed in any::<u64>(), depth in 1u32..6) {
        let e = ExprGen::new(seed, 3, false).expr(depth);
        prop_assert!(fv(&e).is_empty());
        for mode in MODES {
            prop_assert!(translation_facts(0, &e, mode, &TyCtx::new()).fv_constraint.is_empty());
        }
    }

    #[test]
    fn environment_translation_matches_literal_substitution(seed in any::<u64>(), k in 0usize..3, depth in 1u32..5) {
        let e = ExprGen::new(seed, 2, true).expr(depth);
        for mode in MODES {
            let fast = translate_in(k, &e, mode, &free_pool());
            let slow = translate_literal(k, &e, mode, &free_pool());
            prop_assert_eq!(fast.q, slow.q);
            prop_assert_eq!(fast.side.to_string(), slow.side.to_string());
            prop_assert_eq!(fast.result.to_string(), slow.result.to_string());
        }
    }
}

#[test]
fn corpus_translation_properties() {
    let root = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    for name in [
        "cut_choose",
        "surplus",
        "selfridge_conway",
        "selfridge_conway_surplus",
        "waste_makes_haste",
    ] {
        let text = std::fs::read_to_string(root.join(format!("{name}.slice"))).unwrap();
        let p = slice_core::parser::parse_protocol(&text).unwrap();
        for mode in MODES {
            let f = translation_facts(0, &p.expr, mode, &TyCtx::new());
            assert!(f.counts_agree() && f.ys_fill_window(), "{name}");
            assert!(f.fv_constraint.is_empty() && f.fv_equal(), "{name}");
        }
    }
}

#[test]
fn impl_mode_spends_a_variable_per_conditional() {
    let e = Expr::If(
        Box::new(Expr::var("b")),
        Box::new(Expr::var("I")),
        Box::new(Expr::var("J")),
    );
    let core = translation_facts(0, &e, IteMode::Core, &free_pool());
    let imp = translation_facts(0, &e, IteMode::Impl, &free_pool());
    assert_eq!((core.q, imp.q), (0, 1));
    assert!(imp.ys.contains(&1));
}

// Substituting an unused binding erases the free variables of its bound
// expression unless they also reach its side condition.
#[test]
fn dead_bindings_lose_free_variables() {
    let e = Expr::let_in("v", Expr::Tuple(vec![Expr::var("J"), Expr::var("I")]), Expr::Cake);
    let f = translation_facts(0, &e, IteMode::Core, &free_pool());
    assert!(f.dead_binding);
    assert_eq!(f.fv_expr.len(), 2);
    assert!(f.fv_constraint.is_empty());
}
