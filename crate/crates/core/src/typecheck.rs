//! Simple type system: base types, products, and the ℕ, 𝔼 ≤ ℝ coercions.

use crate::ast::{AgentId, Expr, Op, Protocol, Rational, Ty, Value};
use num_traits::{One, Signed};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TypeError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("branches of `{at}` have incompatible types {then} and {other}")]
    BranchMismatch { at: String, then: Ty, other: Ty },
    #[error("guard of `{at}` has type {found}, expected bool")]
    Guard { at: String, found: Ty },
    #[error("projection {index} out of range for type {ty} in `{at}`")]
    Projection { at: String, index: usize, ty: Ty },
    #[error("`{at}` expects {expected}, found {found}")]
    Mismatch { at: String, expected: String, found: Ty },
    #[error("operator `{op}` applied to {found}")]
    Operator { op: String, found: String },
    #[error("agent {agent} is not one of the {count} declared agents")]
    Agent { agent: AgentId, count: u32 },
}

/// Innermost-last typing context.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TyCtx {
    bindings: Vec<(String, Ty)>,
}

impl TyCtx {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, ty: Ty) -> Self {
        self.bindings.push((name.into(), ty));
        self
    }

    pub fn lookup(&self, name: &str) -> Option<&Ty> {
        self.bindings.iter().rev().find(|(x, _)| x == name).map(|(_, t)| t)
    }

    fn push(&mut self, name: &str, ty: Ty) {
        self.bindings.push((name.to_string(), ty));
    }

    fn pop(&mut self) {
        self.bindings.pop();
    }
}

/// Type of a literal value. Reals inside `[0, 1]` are positions.
pub fn type_of_value(v: &Value) -> Ty {
    match v {
        Value::Nat(_) => Ty::Nat,
        Value::Real(r) if !r.is_negative() && *r <= Rational::one() => Ty::Pos,
        Value::Real(_) => Ty::Real,
        Value::Bool(_) => Ty::Bool,
        Value::Interval(_) => Ty::Interval,
        Value::Tuple(vs) => Ty::Tuple(vs.iter().map(type_of_value).collect()),
    }
}

pub(crate) fn snippet(e: &Expr) -> String {
    let s = e.to_string();
    if s.chars().count() > 72 {
        format!("{}…", s.chars().take(72).collect::<String>())
    } else {
        s
    }
}

pub fn infer(e: &Expr, ctx: &TyCtx) -> Result<Ty, TypeError> {
    let mut ctx = ctx.clone();
    go(e, &mut ctx)
}

/// Checks a closed protocol, including that every agent subscript is declared.
pub fn check_protocol(p: &Protocol) -> Result<Ty, TypeError> {
    if let Some(bad) = p.expr.agents().into_iter().find(|a| !a.is_valid_for(p.agent_count)) {
        return Err(TypeError::Agent {
            agent: bad,
            count: p.agent_count,
        });
    }
    infer(&p.expr, &TyCtx::new())
}

fn expect(e: &Expr, found: Ty, want: &Ty, label: &str) -> Result<(), TypeError> {
    if found.is_subtype_of(want) {
        Ok(())
    } else {
        Err(TypeError::Mismatch {
            at: snippet(e),
            expected: label.to_string(),
            found,
        })
    }
}

fn go(e: &Expr, ctx: &mut TyCtx) -> Result<Ty, TypeError> {
    match e {
        Expr::Value(v) => Ok(type_of_value(v)),
        Expr::Var(x) => ctx.lookup(x).cloned().ok_or_else(|| TypeError::Unbound(x.clone())),
        Expr::Let(x, bound, body) => {
            let t = go(bound, ctx)?;
            ctx.push(x, t);
            let out = go(body, ctx);
            ctx.pop();
            out
        }
        Expr::Tuple(items) => items
            .iter()
            .map(|i| go(i, ctx))
            .collect::<Result<_, _>>()
            .map(Ty::Tuple),
        Expr::Proj(k, inner) => {
            let t = go(inner, ctx)?;
            match &t {
                Ty::Tuple(ts) if *k >= 1 && *k <= ts.len() => Ok(ts[*k - 1].clone()),
                _ => Err(TypeError::Projection {
                    at: snippet(e),
                    index: *k,
                    ty: t,
                }),
            }
        }
        Expr::If(c, t, f) => {
            let ct = go(c, ctx)?;
            if ct != Ty::Bool {
                return Err(TypeError::Guard {
                    at: snippet(e),
                    found: ct,
                });
            }
            let (tt, ft) = (go(t, ctx)?, go(f, ctx)?);
            tt.join(&ft).ok_or_else(|| TypeError::BranchMismatch {
                at: snippet(e),
                then: tt,
                other: ft,
            })
        }
        Expr::Cake => Ok(Ty::Interval),
        Expr::Left(p) | Expr::Right(p) => {
            let t = go(p, ctx)?;
            expect(e, t, &Ty::Interval, "an interval")?;
            Ok(Ty::Pos)
        }
        Expr::Divide(p, at) => {
            let pt = go(p, ctx)?;
            expect(e, pt, &Ty::Interval, "an interval to divide")?;
            let at_t = go(at, ctx)?;
            expect(e, at_t, &Ty::Real, "a numeric cut position")?;
            Ok(Ty::Tuple(vec![Ty::Interval, Ty::Interval]))
        }
        Expr::Mark(_, from, target) => {
            let ft = go(from, ctx)?;
            expect(e, ft, &Ty::Pos, "a position to mark from")?;
            let tt = go(target, ctx)?;
            expect(e, tt, &Ty::Real, "a numeric target value")?;
            Ok(Ty::Pos)
        }
        Expr::Eval(_, p) => {
            let t = go(p, ctx)?;
            expect(e, t, &Ty::Interval, "an interval to evaluate")?;
            Ok(Ty::Real)
        }
        Expr::Op(op, args) => {
            let tys = args.iter().map(|a| go(a, ctx)).collect::<Result<Vec<_>, _>>()?;
            op_type(op, &tys).ok_or_else(|| TypeError::Operator {
                op: op.symbol().to_string(),
                found: tys.iter().map(Ty::to_string).collect::<Vec<_>>().join(", "),
            })
        }
    }
}

fn op_type(op: &Op, tys: &[Ty]) -> Option<Ty> {
    if tys.len() != op.arity() {
        return None;
    }
    let numeric = tys.iter().all(Ty::is_numeric);
    let boolean = tys.iter().all(|t| *t == Ty::Bool);
    match op {
        Op::Eq | Op::Ne => tys[0].join(&tys[1]).map(|_| Ty::Bool),
        Op::Le | Op::Ge | Op::Lt | Op::Gt => numeric.then_some(Ty::Bool),
        Op::Add | Op::Mul if tys.iter().all(|t| *t == Ty::Nat) => Some(Ty::Nat),
        Op::Add | Op::Mul | Op::Sub | Op::DivBy(_) => numeric.then_some(Ty::Real),
        Op::And | Op::Or | Op::Not => boolean.then_some(Ty::Bool),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{int, rat};

    fn a(i: u32) -> AgentId {
        AgentId::new(i).unwrap()
    }

    #[test]
    fn cut_choose_core_is_a_pair_of_intervals() {
        // let m = mark_1(0,1/2) in let H = divide(cake, m) in
        // if eval_2(π1 H) ≥ eval_2(π2 H) then (π2 H, π1 H) else (π1 H, π2 H)
        let h = || Expr::var("H");
        let e = Expr::let_in(
            "m",
            Expr::mark(a(1), Expr::real(int(0)), Expr::real(rat(1, 2))),
            Expr::let_in(
                "H",
                Expr::divide(Expr::Cake, Expr::var("m")),
                Expr::ite(
                    Expr::op(
                        Op::Ge,
                        vec![
                            Expr::eval(a(2), Expr::proj(1, h())),
                            Expr::eval(a(2), Expr::proj(2, h())),
                        ],
                    ),
                    Expr::Tuple(vec![Expr::proj(2, h()), Expr::proj(1, h())]),
                    Expr::Tuple(vec![Expr::proj(1, h()), Expr::proj(2, h())]),
                ),
            ),
        );
        assert_eq!(
            infer(&e, &TyCtx::new()),
            Ok(Ty::Tuple(vec![Ty::Interval, Ty::Interval]))
        );
    }

    #[test]
    fn guard_must_be_boolean() {
        let e = Expr::ite(Expr::Cake, Expr::real(int(1)), Expr::real(int(2)));
        assert!(matches!(infer(&e, &TyCtx::new()), Err(TypeError::Guard { .. })));
    }

    #[test]
    fn projection_out_of_range() {
        let e = Expr::proj(3, Expr::Tuple(vec![Expr::Cake, Expr::Cake]));
        assert!(matches!(
            infer(&e, &TyCtx::new()),
            Err(TypeError::Projection { index: 3, .. })
        ));
    }

    #[test]
    fn unbound_and_shadowing() {
        assert_eq!(
            infer(&Expr::var("x"), &TyCtx::new()),
            Err(TypeError::Unbound("x".into()))
        );
        let ctx = TyCtx::new().with("x", Ty::Bool).with("x", Ty::Interval);
        assert_eq!(infer(&Expr::var("x"), &ctx), Ok(Ty::Interval));
    }

    #[test]
    fn positions_coerce_to_reals() {
        let m = Expr::mark(a(1), Expr::real(int(0)), Expr::real(rat(1, 2)));
        let e = Expr::op(Op::Ge, vec![m.clone(), Expr::op(Op::Mul, vec![Expr::real(int(2)), m])]);
        assert_eq!(infer(&e, &TyCtx::new()), Ok(Ty::Bool));
        // a mark must start from a position
        let bad = Expr::mark(a(1), Expr::real(int(2)), Expr::real(rat(1, 2)));
        assert!(infer(&bad, &TyCtx::new()).is_err());
    }

    #[test]
    fn interval_equality_is_allowed() {
        let e = Expr::op(Op::Ne, vec![Expr::Cake, Expr::Cake]);
        assert_eq!(infer(&e, &TyCtx::new()), Ok(Ty::Bool));
        let bad = Expr::op(Op::Eq, vec![Expr::Cake, Expr::real(int(1))]);
        assert!(matches!(infer(&bad, &TyCtx::new()), Err(TypeError::Operator { .. })));
    }

    #[test]
    fn undeclared_agent() {
        let p = Protocol {
            agent_count: 1,
            expr: Expr::eval(a(2), Expr::Cake),
        };
        assert!(matches!(check_protocol(&p), Err(TypeError::Agent { .. })));
    }
}
