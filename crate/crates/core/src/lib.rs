//! Slice: a small language for cake-cutting protocols, with an evaluator,
//! a constraint translation to first-order logic, and an SMT back end.

pub mod ast;
pub mod interp;
pub mod logic;
pub mod parser;
pub mod smt;
pub mod testkit;
pub mod translate;
pub mod typecheck;
pub mod valuation;
