//! SMT-LIB 2 back end: valuation axioms, script emission and the solver driver.

mod emit;
mod run;

use std::fmt;
use std::time::Duration;

use crate::ast::{AgentId, Ty};
use crate::logic::{
    self, and, app, constant, eq, forall, ge, implies, interval, left, nu, right, var, Formula, Func, Var,
};

pub use emit::{emit, EmitError};
pub use run::{find_solver, run, run_with_binary, Model};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Z3,
    Cvc5,
}

impl SolverKind {
    pub fn binary(self) -> &'static str {
        match self {
            SolverKind::Z3 => "z3",
            SolverKind::Cvc5 => "cvc5",
        }
    }

    pub fn parse(s: &str) -> Option<SolverKind> {
        match s {
            "z3" => Some(SolverKind::Z3),
            "cvc5" => Some(SolverKind::Cvc5),
            _ => None,
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.binary())
    }
}

/// How valuation axioms reach the solver.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum AxiomMode {
    /// The valuation axioms, universally quantified over intervals.
    Quantified,
    /// `ν_a(l, r) = F_a(r) - F_a(l)` with `F_a` monotone on every pair of
    /// endpoints the goal mentions. Quantifier-free whenever the goal is.
    #[default]
    Ground,
}

impl AxiomMode {
    pub fn parse(s: &str) -> Option<AxiomMode> {
        match s {
            "quantified" => Some(AxiomMode::Quantified),
            "ground" => Some(AxiomMode::Ground),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    pub solver: SolverKind,
    pub timeout: Duration,
    pub logic: String,
    pub axioms: AxiomMode,
    /// Emit the two endpoint-monotonicity axioms. They rule out valuations
    /// with zero-density stretches.
    pub endpoint_axioms: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            solver: SolverKind::Z3,
            timeout: Duration::from_secs(300),
            logic: "ALL".to_string(),
            axioms: AxiomMode::Ground,
            endpoint_axioms: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Unsat,
    Sat(String),
    Unknown(String),
    Timeout,
    SolverError(String),
}

impl Verdict {
    pub fn is_unsat(&self) -> bool {
        matches!(self, Verdict::Unsat)
    }

    pub fn is_sat(&self) -> bool {
        matches!(self, Verdict::Sat(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Unsat => "unsat",
            Verdict::Sat(_) => "sat",
            Verdict::Unknown(_) => "unknown",
            Verdict::Timeout => "timeout",
            Verdict::SolverError(_) => "error",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Unknown(why) if !why.is_empty() => write!(f, "unknown ({why})"),
            Verdict::SolverError(why) => write!(f, "error ({why})"),
            other => f.write_str(other.label()),
        }
    }
}

fn iv(name: &str) -> Var {
    Var::x(name, Ty::Interval)
}

/// The eight valuation axioms for each agent, in order.
pub fn axioms(n_agents: u32) -> Vec<Formula> {
    axioms_with(n_agents, true)
}

pub fn axioms_with(n_agents: u32, endpoint_axioms: bool) -> Vec<Formula> {
    let mut out = Vec::new();
    for i in 1..=n_agents {
        let a = AgentId::new(i).expect("agents are 1-based");
        let (i0, i1, i2) = (iv("I"), iv("I1"), iv("I2"));
        let (t0, t1, t2) = (var(i0.clone()), var(i1.clone()), var(i2.clone()));
        let v = |t: &logic::Term| nu(a, t.clone());
        let real = |n: i64| constant(crate::ast::Value::Real(crate::ast::int(n)));
        out.push(eq(nu(a, interval(real(0), real(1))), real(1)));
        out.push(forall(vec![i0.clone()], ge(v(&t0), real(0))));
        out.push(forall(
            vec![i1.clone(), i2.clone()],
            implies(
                eq(left(t2.clone()), right(t1.clone())),
                eq(
                    app(Func::Op(crate::ast::Op::Add), vec![v(&t1), v(&t2)]),
                    nu(a, interval(left(t1.clone()), right(t2.clone()))),
                ),
            ),
        ));
        out.push(forall(
            vec![i1.clone(), i2.clone()],
            implies(
                and(vec![
                    ge(left(t2.clone()), left(t1.clone())),
                    ge(right(t1.clone()), right(t2.clone())),
                ]),
                ge(v(&t1), v(&t2)),
            ),
        ));
        out.push(forall(vec![i0.clone()], ge(real(1), v(&t0))));
        out.push(forall(
            vec![i0.clone()],
            implies(eq(left(t0.clone()), right(t0.clone())), eq(v(&t0), real(0))),
        ));
        if endpoint_axioms {
            out.push(forall(
                vec![i1.clone(), i2.clone()],
                implies(
                    and(vec![ge(left(t1.clone()), left(t2.clone())), ge(v(&t1), v(&t2))]),
                    ge(right(t1.clone()), right(t2.clone())),
                ),
            ));
            out.push(forall(
                vec![i1, i2],
                implies(
                    and(vec![ge(right(t1.clone()), right(t2.clone())), ge(v(&t2), v(&t1))]),
                    ge(left(t1), left(t2)),
                ),
            ));
        }
    }
    out
}

/// Script for `goal` together with the axioms for `n_agents`.
pub fn script(goal: &Formula, n_agents: u32, cfg: &SolverConfig) -> Result<String, EmitError> {
    emit(goal, &axioms_with(n_agents, cfg.endpoint_axioms), cfg)
}
