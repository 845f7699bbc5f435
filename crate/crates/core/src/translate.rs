//! Constraint translation `T = (T_Q, T_s, T_ρ)` from expressions to logic,
//! plus the envy-freeness and progress goals built on top of it.
//!
//! Let-bound variables are substituted eagerly. Instead of rewriting the
//! body after translating it, the translator carries the substitution as an
//! environment and embeds the bound term at each use; the two produce the
//! same formula, which `translate_literal` checks in the test suite.

use std::collections::HashMap;
use std::rc::Rc;

use crate::ast::{arity_of_output, int, Expr, Interval, Op, ShapeError, Ty, Value};
use crate::logic::{
    self, and, app, constant, eq, exists, forall, ge, implies, interval, left, nu, or, proj, right, var, Formula, Func,
    Substitution, Term, Var, VarKind,
};
use crate::typecheck::{infer, TyCtx, TypeError};

/// How conditionals are translated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum IteMode {
    /// Result is an `ite` term over the branch results.
    #[default]
    Core,
    /// Result is a fresh variable equated with the taken branch.
    Impl,
}

impl IteMode {
    pub fn parse(s: &str) -> Option<IteMode> {
        match s {
            "core" => Some(IteMode::Core),
            "impl" => Some(IteMode::Impl),
            _ => None,
        }
    }
}

/// Output of the translation at one node.
#[derive(Clone, Debug)]
pub struct ConstraintTriple {
    /// `T_Q`: next free index after the node's fresh variables.
    pub q: usize,
    /// `T_s`: side conditions.
    pub side: Formula,
    /// `T_ρ`: the node's result.
    pub result: Term,
}

/// Number of fresh variables an expression introduces.
pub fn fresh_count(e: &Expr, mode: IteMode) -> usize {
    let own = match (e, mode) {
        (Expr::Mark(..), _) | (Expr::If(..), IteMode::Impl) => 1,
        _ => 0,
    };
    own + e.children().into_iter().map(|c| fresh_count(c, mode)).sum::<usize>()
}

/// `N(e)` for every node of a tree, keyed by node address.
///
/// Lookups for nodes outside the tree fall back to recomputation.
pub struct FreshCounts {
    counts: HashMap<usize, (usize, usize)>,
}

impl FreshCounts {
    pub fn new(root: &Expr) -> Self {
        let mut counts = HashMap::new();
        fill(root, &mut counts);
        FreshCounts { counts }
    }

    pub fn get(&self, e: &Expr, mode: IteMode) -> usize {
        match self.counts.get(&(e as *const Expr as usize)) {
            Some(&(c, i)) => match mode {
                IteMode::Core => c,
                IteMode::Impl => i,
            },
            None => fresh_count(e, mode),
        }
    }
}

fn fill(e: &Expr, counts: &mut HashMap<usize, (usize, usize)>) -> (usize, usize) {
    let (mut c, mut i) = match e {
        Expr::Mark(..) => (1, 1),
        Expr::If(..) => (0, 1),
        _ => (0, 0),
    };
    for child in e.children() {
        let (cc, ci) = fill(child, counts);
        c += cc;
        i += ci;
    }
    counts.insert(e as *const Expr as usize, (c, i));
    (c, i)
}

/// Embedded value `v̂`.
pub fn embed(v: &Value) -> Term {
    constant(v.clone())
}

fn one() -> Term {
    constant(Value::Real(int(1)))
}

fn bool_term(b: bool) -> Term {
    constant(Value::Bool(b))
}

/// Persistent program-variable environment, innermost first.
#[derive(Clone, Default)]
struct Env(Option<Rc<EnvNode>>);

struct EnvNode {
    name: String,
    term: Term,
    next: Env,
}

impl Env {
    fn bind(&self, name: &str, term: Term) -> Env {
        Env(Some(Rc::new(EnvNode {
            name: name.to_string(),
            term,
            next: self.clone(),
        })))
    }

    fn lookup(&self, name: &str) -> Option<&Term> {
        let mut cur = self.0.as_ref();
        while let Some(node) = cur {
            if node.name == name {
                return Some(&node.term);
            }
            cur = node.next.0.as_ref();
        }
        None
    }
}

struct Translator<'a> {
    mode: IteMode,
    counts: &'a FreshCounts,
    ctx: &'a TyCtx,
}

impl Translator<'_> {
    fn n(&self, e: &Expr) -> usize {
        self.counts.get(e, self.mode)
    }

    fn free_var(&self, x: &str) -> Term {
        let sort = self.ctx.lookup(x).cloned().unwrap_or(Ty::Real);
        var(Var::x(x, sort))
    }

    fn seq(&self, k: usize, items: &[Expr], env: &Env) -> (usize, Vec<Formula>, Vec<Term>) {
        let mut q = k;
        let mut sides = Vec::with_capacity(items.len());
        let mut results = Vec::with_capacity(items.len());
        for item in items {
            let t = self.tr(q, item, env);
            q = t.q;
            sides.push(t.side);
            results.push(t.result);
        }
        (q, sides, results)
    }

    fn tr(&self, k: usize, e: &Expr, env: &Env) -> ConstraintTriple {
        let plain = |result: Term| ConstraintTriple {
            q: k,
            side: logic::tt(),
            result,
        };
        match e {
            Expr::Value(v) => plain(embed(v)),
            Expr::Var(x) => plain(env.lookup(x).cloned().unwrap_or_else(|| self.free_var(x))),
            Expr::Cake => plain(embed(&Value::Interval(Interval::cake()))),
            Expr::Op(op, args) => {
                let (q, sides, results) = self.seq(k, args, env);
                ConstraintTriple {
                    q,
                    side: and(sides),
                    result: app(Func::Op(op.clone()), results),
                }
            }
            Expr::Tuple(items) => {
                let (q, sides, results) = self.seq(k, items, env);
                ConstraintTriple {
                    q,
                    side: and(sides),
                    result: app(Func::Tuple, results),
                }
            }
            Expr::Proj(i, inner) => {
                let t = self.tr(k, inner, env);
                ConstraintTriple {
                    result: proj(*i, t.result),
                    ..t
                }
            }
            Expr::Left(inner) => {
                let t = self.tr(k, inner, env);
                ConstraintTriple {
                    result: left(t.result),
                    ..t
                }
            }
            Expr::Right(inner) => {
                let t = self.tr(k, inner, env);
                ConstraintTriple {
                    result: right(t.result),
                    ..t
                }
            }
            Expr::Eval(a, inner) => {
                let t = self.tr(k, inner, env);
                ConstraintTriple {
                    result: nu(*a, t.result),
                    ..t
                }
            }
            Expr::Let(x, bound, body) => {
                let b = self.tr(k, bound, env);
                let inner = env.bind(x, b.result.clone());
                let t = self.tr(b.q, body, &inner);
                ConstraintTriple {
                    q: t.q,
                    side: and(vec![b.side, t.side]),
                    result: t.result,
                }
            }
            Expr::If(c, t, f) => {
                let g = self.tr(k, c, env);
                let th = self.tr(g.q, t, env);
                let el = self.tr(th.q, f, env);
                let on_true = eq(g.result.clone(), bool_term(true));
                let on_false = eq(g.result.clone(), bool_term(false));
                match self.mode {
                    IteMode::Core => ConstraintTriple {
                        q: el.q,
                        side: and(vec![
                            g.side,
                            or(vec![and(vec![on_true, th.side]), and(vec![on_false, el.side])]),
                        ]),
                        result: logic::ite(g.result, th.result, el.result),
                    },
                    IteMode::Impl => {
                        let y = var(Var::y(el.q + 1, logic::sort_of(&th.result)));
                        ConstraintTriple {
                            q: el.q + 1,
                            side: and(vec![
                                or(vec![
                                    and(vec![on_true, th.side, eq(y.clone(), th.result)]),
                                    and(vec![on_false, el.side, eq(y.clone(), el.result)]),
                                ]),
                                g.side,
                            ]),
                            result: y,
                        }
                    }
                }
            }
            Expr::Divide(p, at) => {
                let piece = self.tr(k, p, env);
                let cut = self.tr(piece.q, at, env);
                let lo = left(piece.result.clone());
                let hi = right(piece.result);
                ConstraintTriple {
                    q: cut.q,
                    side: and(vec![
                        piece.side,
                        cut.side,
                        ge(cut.result.clone(), lo.clone()),
                        ge(hi.clone(), cut.result.clone()),
                    ]),
                    result: app(
                        Func::Tuple,
                        vec![interval(lo, cut.result.clone()), interval(cut.result, hi)],
                    ),
                }
            }
            Expr::Mark(a, from, target) => {
                let l = self.tr(k, from, env);
                let v = self.tr(l.q, target, env);
                let y = var(Var::y(v.q + 1, Ty::Pos));
                ConstraintTriple {
                    q: v.q + 1,
                    side: and(vec![
                        l.side,
                        v.side,
                        eq(nu(*a, interval(l.result.clone(), y.clone())), v.result.clone()),
                        ge(nu(*a, interval(l.result, one())), v.result),
                    ]),
                    result: y,
                }
            }
        }
    }
}

/// `T(k, e)` with free program variables embedded as `x̂`, sorted by `ctx`
/// (ℝ when absent).
pub fn translate_in(k: usize, e: &Expr, mode: IteMode, ctx: &TyCtx) -> ConstraintTriple {
    let counts = FreshCounts::new(e);
    Translator {
        mode,
        counts: &counts,
        ctx,
    }
    .tr(k, e, &Env::default())
}

pub fn translate(k: usize, e: &Expr, mode: IteMode) -> ConstraintTriple {
    translate_in(k, e, mode, &TyCtx::new())
}

/// Reference translation that keeps let-bound variables as `x̂` and applies
/// `{T_ρ(k,e1)/x̂}` to the body afterwards. Quadratic; used as a test oracle.
pub fn translate_literal(k: usize, e: &Expr, mode: IteMode, ctx: &TyCtx) -> ConstraintTriple {
    let sub = |k: usize, e: &Expr| translate_literal(k, e, mode, ctx);
    let seq = |k: usize, items: &[Expr]| {
        let mut q = k;
        let mut sides = Vec::new();
        let mut results = Vec::new();
        for item in items {
            let t = sub(q, item);
            q = t.q;
            sides.push(t.side);
            results.push(t.result);
        }
        (q, sides, results)
    };
    match e {
        Expr::Let(x, bound, body) => {
            let b = sub(k, bound);
            let sort = logic::sort_of(&b.result);
            let inner_ctx = ctx.clone().with(x.clone(), sort);
            let t = translate_literal(b.q, body, mode, &inner_ctx);
            let s = Substitution::new().then(x.clone(), b.result);
            ConstraintTriple {
                q: t.q,
                side: and(vec![b.side, s.apply(&t.side)]),
                result: s.apply_term(&t.result),
            }
        }
        Expr::Op(op, args) => {
            let (q, sides, results) = seq(k, args);
            ConstraintTriple {
                q,
                side: and(sides),
                result: app(Func::Op(op.clone()), results),
            }
        }
        Expr::Tuple(items) => {
            let (q, sides, results) = seq(k, items);
            ConstraintTriple {
                q,
                side: and(sides),
                result: app(Func::Tuple, results),
            }
        }
        Expr::Proj(..)
        | Expr::Left(_)
        | Expr::Right(_)
        | Expr::Eval(..)
        | Expr::If(..)
        | Expr::Divide(..)
        | Expr::Mark(..) => {
            // these clauses never bind, so they only differ from the
            // environment translation through their children
            let children: Vec<ConstraintTriple> = {
                let mut q = k;
                e.children()
                    .into_iter()
                    .map(|c| {
                        let t = sub(q, c);
                        q = t.q;
                        t
                    })
                    .collect()
            };
            rebuild(k, e, mode, children)
        }
        _ => translate_in(k, e, mode, ctx),
    }
}

/// Combines already-translated children of a non-binding node.
fn rebuild(k: usize, e: &Expr, mode: IteMode, mut ch: Vec<ConstraintTriple>) -> ConstraintTriple {
    match e {
        Expr::Proj(i, _) => {
            let t = ch.pop().unwrap();
            ConstraintTriple {
                result: proj(*i, t.result),
                ..t
            }
        }
        Expr::Left(_) => {
            let t = ch.pop().unwrap();
            ConstraintTriple {
                result: left(t.result),
                ..t
            }
        }
        Expr::Right(_) => {
            let t = ch.pop().unwrap();
            ConstraintTriple {
                result: right(t.result),
                ..t
            }
        }
        Expr::Eval(a, _) => {
            let t = ch.pop().unwrap();
            ConstraintTriple {
                result: nu(*a, t.result),
                ..t
            }
        }
        Expr::If(..) => {
            let el = ch.pop().unwrap();
            let th = ch.pop().unwrap();
            let g = ch.pop().unwrap();
            let on_true = eq(g.result.clone(), bool_term(true));
            let on_false = eq(g.result.clone(), bool_term(false));
            match mode {
                IteMode::Core => ConstraintTriple {
                    q: el.q,
                    side: and(vec![
                        g.side,
                        or(vec![and(vec![on_true, th.side]), and(vec![on_false, el.side])]),
                    ]),
                    result: logic::ite(g.result, th.result, el.result),
                },
                IteMode::Impl => {
                    let y = var(Var::y(el.q + 1, logic::sort_of(&th.result)));
                    ConstraintTriple {
                        q: el.q + 1,
                        side: and(vec![
                            or(vec![
                                and(vec![on_true, th.side, eq(y.clone(), th.result)]),
                                and(vec![on_false, el.side, eq(y.clone(), el.result)]),
                            ]),
                            g.side,
                        ]),
                        result: y,
                    }
                }
            }
        }
        Expr::Divide(..) => {
            let cut = ch.pop().unwrap();
            let piece = ch.pop().unwrap();
            let lo = left(piece.result.clone());
            let hi = right(piece.result);
            ConstraintTriple {
                q: cut.q,
                side: and(vec![
                    piece.side,
                    cut.side,
                    ge(cut.result.clone(), lo.clone()),
                    ge(hi.clone(), cut.result.clone()),
                ]),
                result: app(
                    Func::Tuple,
                    vec![interval(lo, cut.result.clone()), interval(cut.result, hi)],
                ),
            }
        }
        Expr::Mark(a, ..) => {
            let v = ch.pop().unwrap();
            let l = ch.pop().unwrap();
            let y = var(Var::y(v.q + 1, Ty::Pos));
            ConstraintTriple {
                q: v.q + 1,
                side: and(vec![
                    l.side,
                    v.side,
                    eq(nu(*a, interval(l.result.clone(), y.clone())), v.result.clone()),
                    ge(nu(*a, interval(l.result, one())), v.result),
                ]),
                result: y,
            }
        }
        _ => unreachable!("rebuild is only called on non-binding compound nodes, got k={k}"),
    }
}

/// `c(k, e, t) = T_s(k, e) ∧ (t = T_ρ(k, e))`.
pub fn constraint_of(k: usize, e: &Expr, t: Term, mode: IteMode) -> Formula {
    let tr = translate(k, e, mode);
    and(vec![tr.side, eq(t, tr.result)])
}

/// The y-variables `y_{lo+1} … y_{hi}` that occur free in `f`, in order.
fn ys_in(f: &Formula, hi: usize) -> Vec<Var> {
    logic::free_vars(f)
        .into_iter()
        .filter(|v| matches!(v.kind, VarKind::Y(i) if i <= hi))
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum GoalError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
}

/// `ν^k_a(p)`: agent `a`'s value for a share of `k` intervals.
fn share_value(a: crate::ast::AgentId, share: Term, k: usize) -> Term {
    if k == 1 {
        return nu(a, share);
    }
    (1..=k)
        .map(|j| nu(a, proj(j, share.clone())))
        .reduce(|acc, t| app(Func::Op(Op::Add), vec![acc, t]))
        .expect("shares have at least one interval")
}

/// `E(ret)`: every agent values its own share at least as much as any other.
pub fn envy_free(ret: &Term, shape: &[usize]) -> Formula {
    let n = shape.len();
    let share = |b: usize| if n == 1 { ret.clone() } else { proj(b + 1, ret.clone()) };
    let mut parts = Vec::new();
    for a in 0..n {
        let agent = crate::ast::AgentId::new(a as u32 + 1).expect("agent indices start at 1");
        for b in 0..n {
            if a != b {
                parts.push(ge(
                    share_value(agent, share(a), shape[a]),
                    share_value(agent, share(b), shape[b]),
                ));
            }
        }
    }
    and(parts)
}

/// `∃ret.(∃ȳ. c(e, ret)) ∧ ¬E(ret)`: satisfiable iff some run ends in envy.
pub fn envy_goal(e: &Expr, n_agents: u32, mode: IteMode) -> Result<Formula, GoalError> {
    let ty = infer(e, &TyCtx::new())?;
    let shape = arity_of_output(&ty, n_agents)?;
    let ret = Var::ret(ty);
    let ret_t = var(ret.clone());
    let c = constraint_of(0, e, ret_t.clone(), mode);
    let n = fresh_count(e, mode);
    let ys = ys_in(&c, n);
    Ok(exists(
        vec![ret],
        and(vec![exists(ys, c), logic::not(envy_free(&ret_t, &shape))]),
    ))
}

/// Progress translation `ef(k, e, B, S)`, with `S` carried as an environment
/// of already-substituted terms.
struct Progress<'a> {
    tr: Translator<'a>,
}

impl Progress<'_> {
    /// `c(k, (e1, e2), ret)S ∧ B ⇒ goal`, closed over `ret` and the y's.
    fn obligation(
        &self,
        k: usize,
        e1: &Expr,
        e2: &Expr,
        b: &Formula,
        env: &Env,
        goal: impl FnOnce(&Term) -> Formula,
    ) -> Formula {
        let t1 = self.tr.tr(k, e1, env);
        let t2 = self.tr.tr(t1.q, e2, env);
        let ret_sort = Ty::Tuple(vec![logic::sort_of(&t1.result), logic::sort_of(&t2.result)]);
        let ret = Var::ret(ret_sort);
        let ret_t = var(ret.clone());
        let c = and(vec![
            t1.side,
            t2.side,
            eq(ret_t.clone(), app(Func::Tuple, vec![t1.result, t2.result])),
        ]);
        let antecedent = and(vec![c, b.clone()]);
        let ys = ys_in(&antecedent, t2.q);
        forall(vec![ret], forall(ys, implies(antecedent, goal(&ret_t))))
    }

    fn ef(&self, k: usize, e: &Expr, b: &Formula, env: &Env) -> Formula {
        match e {
            Expr::Value(_) | Expr::Var(_) | Expr::Cake => logic::tt(),
            Expr::Mark(a, e1, e2) => {
                let a = *a;
                and(vec![
                    self.ef(k, e1, b, env),
                    self.ef(k, e2, b, env),
                    self.obligation(k, e1, e2, b, env, |ret| {
                        ge(nu(a, interval(proj(1, ret.clone()), one())), proj(2, ret.clone()))
                    }),
                ])
            }
            Expr::Divide(e1, e2) => and(vec![
                self.ef(k, e1, b, env),
                self.ef(k, e2, b, env),
                self.obligation(k, e1, e2, b, env, |ret| {
                    let piece = proj(1, ret.clone());
                    let cut = proj(2, ret.clone());
                    and(vec![ge(cut.clone(), left(piece.clone())), ge(right(piece), cut)])
                }),
            ]),
            Expr::If(c, t, f) => {
                let g = self.tr.tr(k, c, env);
                let k1 = k + self.tr.n(c);
                let branch = |val: bool| and(vec![eq(g.result.clone(), bool_term(val)), g.side.clone(), b.clone()]);
                and(vec![
                    self.ef(k, c, b, env),
                    self.ef(k1, t, &branch(true), env),
                    self.ef(k1, f, &branch(false), env),
                ])
            }
            Expr::Let(x, bound, body) => {
                let t = self.tr.tr(k, bound, env);
                let inner = env.bind(x, t.result);
                and(vec![
                    self.ef(k, bound, b, env),
                    self.ef(t.q, body, &and(vec![b.clone(), t.side]), &inner),
                ])
            }
            _ => and(e.children().into_iter().map(|c| self.ef(k, c, b, env)).collect()),
        }
    }
}

/// `ef(0, e, true, ε)`.
pub fn progress_formula(e: &Expr, mode: IteMode) -> Formula {
    let counts = FreshCounts::new(e);
    let ctx = TyCtx::new();
    Progress {
        tr: Translator {
            mode,
            counts: &counts,
            ctx: &ctx,
        },
    }
    .ef(0, e, &logic::tt(), &Env::default())
}

/// `¬ef(0, e, true, ε)`: unsatisfiable iff progress holds for all valuations.
pub fn progress_goal(e: &Expr, mode: IteMode) -> Formula {
    logic::not(progress_formula(e, mode))
}

/// Property checked by the verification pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Property {
    Envy,
    Progress,
}

impl Property {
    pub fn parse(s: &str) -> Option<Property> {
        match s {
            "envy" => Some(Property::Envy),
            "progress" => Some(Property::Progress),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Property::Envy => "envy-free",
            Property::Progress => "progress",
        }
    }
}

/// Satisfiability target for `property`: unsat means the property holds.
pub fn goal(p: &crate::ast::Protocol, property: Property, mode: IteMode) -> Result<Formula, GoalError> {
    crate::typecheck::check_protocol(p)?;
    match property {
        Property::Envy => envy_goal(&p.expr, p.agent_count, mode),
        Property::Progress => Ok(progress_goal(&p.expr, mode)),
    }
}

/// Number of root-to-leaf branch combinations.
pub fn count_paths(e: &Expr) -> u128 {
    match e {
        Expr::If(c, t, f) => count_paths(c).saturating_mul(count_paths(t).saturating_add(count_paths(f))),
        _ => e
            .children()
            .into_iter()
            .map(count_paths)
            .fold(1u128, |acc, p| acc.saturating_mul(p)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{rat, AgentId};
    use crate::logic::FormulaNode;

    fn a(i: u32) -> AgentId {
        AgentId::new(i).unwrap()
    }

    fn cut_choose() -> Expr {
        let h = || Expr::var("H");
        Expr::let_in(
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
        )
    }

    #[test]
    fn values_translate_to_themselves() {
        let v = Expr::real(rat(1, 3));
        for k in [0, 7] {
            let t = translate(k, &v, IteMode::Core);
            assert_eq!(t.q, k);
            assert_eq!(*t.side, FormulaNode::True);
            assert_eq!(t.result, constant(Value::Real(rat(1, 3))));
        }
    }

    #[test]
    fn cut_choose_has_one_mark_variable() {
        let t = translate(0, &cut_choose(), IteMode::Core);
        assert_eq!(t.q, 1);
        let FormulaNode::And(parts) = &*t.side else {
            panic!("expected a conjunction, got {}", t.side)
        };
        // mark equality, mark feasibility, two divide bounds, the branch disjunction
        assert_eq!(parts.len(), 5);
        assert!(matches!(&*parts[4], FormulaNode::Or(d) if d.len() == 2));
    }

    #[test]
    fn impl_mode_adds_one_variable_per_conditional() {
        let t = translate(0, &cut_choose(), IteMode::Impl);
        assert_eq!(t.q, 2);
        assert_eq!(
            *t.result,
            logic::TermNode::Var(Var::y(2, Ty::Tuple(vec![Ty::Interval, Ty::Interval])))
        );
    }

    #[test]
    fn literal_and_environment_translations_agree() {
        for mode in [IteMode::Core, IteMode::Impl] {
            let fast = translate(0, &cut_choose(), mode);
            let slow = translate_literal(0, &cut_choose(), mode, &TyCtx::new());
            assert_eq!(fast.side, slow.side);
            assert_eq!(fast.result, slow.result);
        }
    }

    #[test]
    fn single_agent_goal_is_trivially_unsat() {
        let g = envy_goal(&Expr::Cake, 1, IteMode::Core).unwrap();
        assert_eq!(*g, FormulaNode::False);
    }

    #[test]
    fn progress_of_cake_is_trivial() {
        assert_eq!(*progress_goal(&Expr::Cake, IteMode::Core), FormulaNode::False);
    }

    #[test]
    fn progress_of_cut_choose_has_two_obligations() {
        let f = progress_formula(&cut_choose(), IteMode::Core);
        let FormulaNode::And(parts) = &*f else { panic!("{f}") };
        assert_eq!(parts.len(), 2);
        assert!(parts.iter().all(|p| matches!(&**p, FormulaNode::Forall(..))));
    }

    #[test]
    fn paths() {
        assert_eq!(count_paths(&Expr::Cake), 1);
        let e = Expr::ite(Expr::Value(Value::Bool(true)), Expr::Cake, Expr::Cake);
        assert_eq!(count_paths(&e), 2);
        assert_eq!(count_paths(&cut_choose()), 2);
    }
}
