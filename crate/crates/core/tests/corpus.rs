use std::path::PathBuf;

use slice_core::ast::{arity_of_output, Protocol};
use slice_core::parser::{desugar, parse, parse_protocol};
use slice_core::translate::{count_paths, fresh_count, IteMode};
use slice_core::typecheck::check_protocol;

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name)
}

fn load(name: &str) -> Protocol {
    let text = std::fs::read_to_string(corpus(name)).unwrap();
    parse_protocol(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

const ALL: [&str; 5] = [
    "cut_choose.slice",
    "surplus.slice",
    "selfridge_conway.slice",
    "selfridge_conway_surplus.slice",
    "waste_makes_haste.slice",
];

#[test]
fn corpus_typechecks_with_allocation_shapes() {
    let shapes = [vec![1, 1], vec![1, 1], vec![2, 2, 2], vec![1, 1, 1], vec![1, 1, 1]];
    for (name, shape) in ALL.iter().zip(shapes) {
        let p = load(name);
        let ty = check_protocol(&p).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(arity_of_output(&ty, p.agent_count).unwrap(), shape, "{name}");
    }
}

#[test]
fn path_counts() {
    let expected = [2u128, 2, 1800, 216, 6984];
    for (name, want) in ALL.iter().zip(expected) {
        assert_eq!(count_paths(&load(name).expr), want, "{name}");
    }
}

#[test]
fn mark_counts() {
    let expected = [1usize, 2, 7, 3, 4];
    for (name, want) in ALL.iter().zip(expected) {
        assert_eq!(fresh_count(&load(name).expr, IteMode::Core), want, "{name}");
    }
}

#[test]
fn pretty_printing_is_a_fixpoint() {
    for name in ALL {
        let text = std::fs::read_to_string(corpus(name)).unwrap();
        let once = parse(&text).unwrap().to_source();
        let twice = parse(&once).unwrap().to_source();
        assert_eq!(once, twice, "{name}");
        assert_eq!(
            desugar(&parse(&once).unwrap()),
            desugar(&parse(&text).unwrap()),
            "{name}"
        );
    }
}
