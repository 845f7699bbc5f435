use std::collections::HashMap;

use super::surface::{AgentRef, Param, Pattern, Program, SExpr, SKind};
use crate::ast::{AgentId, Expr, Interval, Op, Protocol, Value};

/// Lowers a parsed program to a closed core expression.
///
/// Generated binders start with `$`, which the lexer never produces, so
/// they cannot collide with user names.
pub fn desugar(p: &Program) -> Protocol {
    let mut d = Desugarer { prog: p, fresh: 0 };
    let expr = d.expr(&p.main, &Env::default());
    Protocol {
        agent_count: p.agent_count,
        expr,
    }
}

#[derive(Clone, Default)]
struct Env {
    vars: HashMap<String, String>,
    agents: HashMap<String, AgentId>,
}

impl Env {
    fn bind(&self, x: &str) -> Env {
        let mut e = self.clone();
        e.vars.insert(x.to_string(), x.to_string());
        e
    }
}

struct Desugarer<'a> {
    prog: &'a Program,
    fresh: usize,
}

impl Desugarer<'_> {
    fn fresh(&mut self, stem: &str) -> String {
        self.fresh += 1;
        format!("${stem}{}", self.fresh)
    }

    fn agent(&self, a: &AgentRef, env: &Env) -> AgentId {
        match a {
            AgentRef::Id(id) => *id,
            AgentRef::Param(p) => env.agents[p],
        }
    }

    fn boxed(&mut self, e: &SExpr, env: &Env) -> Box<Expr> {
        Box::new(self.expr(e, env))
    }

    fn expr(&mut self, e: &SExpr, env: &Env) -> Expr {
        match &e.kind {
            SKind::Num(r) => Expr::real(r.clone()),
            SKind::Bool(b) => Expr::Value(Value::Bool(*b)),
            SKind::IntervalLit(lo, hi) => Expr::Value(Value::Interval(
                Interval::new(lo.clone(), hi.clone()).expect("checked by the parser"),
            )),
            SKind::Var(x) => Expr::Var(env.vars.get(x).cloned().unwrap_or_else(|| x.clone())),
            SKind::Op(op, args) => Expr::Op(op.clone(), args.iter().map(|a| self.expr(a, env)).collect()),
            SKind::Let(pat, bound, body) => {
                let bound = self.expr(bound, env);
                self.bind_all(vec![(pat.clone(), bound)], env, body)
            }
            SKind::If(c, t, f) => Expr::If(self.boxed(c, env), self.boxed(t, env), self.boxed(f, env)),
            SKind::Tuple(items) => Expr::Tuple(items.iter().map(|a| self.expr(a, env)).collect()),
            SKind::Piece(e, k) => Expr::Proj(*k, self.boxed(e, env)),
            SKind::Cake => Expr::Cake,
            SKind::Left(e) => Expr::Left(self.boxed(e, env)),
            SKind::Right(e) => Expr::Right(self.boxed(e, env)),
            SKind::Divide(a, b) => Expr::Divide(self.boxed(a, env), self.boxed(b, env)),
            SKind::Mark(a, l, t) => Expr::Mark(self.agent(a, env), self.boxed(l, env), self.boxed(t, env)),
            SKind::Eval(a, p) => Expr::Eval(self.agent(a, env), self.boxed(p, env)),
            SKind::Sort(a, items) => {
                let agent = self.agent(a, env);
                let items: Vec<Expr> = items.iter().map(|i| self.expr(i, env)).collect();
                self.sort(agent, items)
            }
            SKind::Alloc(items) => {
                let mut items: Vec<Expr> = items.iter().map(|i| self.expr(i, env)).collect();
                if items.len() == 1 {
                    items.pop().unwrap()
                } else {
                    Expr::Tuple(items)
                }
            }
            SKind::Call(name, args) => self.call(name, args, env),
        }
    }

    /// Binds patterns in order; a tuple pattern first binds the whole value
    /// to a fresh name and then projects out of it.
    fn bind_all(&mut self, mut pending: Vec<(Pattern, Expr)>, env: &Env, body: &SExpr) -> Expr {
        if pending.is_empty() {
            return self.expr(body, env);
        }
        let (pat, bound) = pending.remove(0);
        match pat {
            Pattern::Var(x) => {
                let inner = env.bind(&x);
                let rest = self.bind_all(pending, &inner, body);
                Expr::let_in(x, bound, rest)
            }
            Pattern::Tuple(parts) => {
                let h = self.fresh("h");
                let mut next: Vec<(Pattern, Expr)> = parts
                    .into_iter()
                    .enumerate()
                    .map(|(i, p)| (p, Expr::proj(i + 1, Expr::var(h.clone()))))
                    .collect();
                next.extend(pending);
                let rest = self.bind_all(next, env, body);
                Expr::let_in(h, bound, rest)
            }
        }
    }

    fn call(&mut self, name: &str, args: &[SExpr], env: &Env) -> Expr {
        let def = self.prog.def(name).expect("checked by the parser");
        let body_binders = binders(&def.body);
        let mut inner = Env::default();
        let mut lets = Vec::new();
        for (param, arg) in def.params.iter().zip(args) {
            match param {
                Param::Agent(p) => {
                    let id = match &arg.kind {
                        SKind::Num(r) => {
                            let i: u32 = r.to_integer().try_into().expect("checked by the parser");
                            AgentId::new(i).expect("checked by the parser")
                        }
                        SKind::Var(q) => env.agents[q],
                        _ => unreachable!("agent arguments are numbers or agent parameters"),
                    };
                    inner.agents.insert(p.clone(), id);
                }
                Param::Value(p) => {
                    let value = self.expr(arg, env);
                    match value {
                        Expr::Var(v) if !body_binders.contains(&v.as_str()) => {
                            inner.vars.insert(p.clone(), v);
                        }
                        other => {
                            let f = self.fresh("a");
                            inner.vars.insert(p.clone(), f.clone());
                            lets.push((f, other));
                        }
                    }
                }
            }
        }
        let mut out = self.expr(&def.body, &inner);
        for (f, bound) in lets.into_iter().rev() {
            out = Expr::let_in(f, bound, out);
        }
        out
    }

    /// Sorts pieces in decreasing order of the agent's value using an
    /// insertion network; ties keep input order.
    fn sort(&mut self, agent: AgentId, items: Vec<Expr>) -> Expr {
        if items.len() == 1 {
            return items.into_iter().next().unwrap();
        }
        let mut lets = Vec::new();
        let mut pieces = Vec::new();
        for item in items {
            match item {
                Expr::Var(v) => pieces.push(v),
                other => {
                    let p = self.fresh("p");
                    lets.push((p.clone(), other));
                    pieces.push(p);
                }
            }
        }
        let mut vals = Vec::new();
        for p in &pieces {
            let v = self.fresh("v");
            lets.push((v.clone(), Expr::eval(agent, Expr::var(p.clone()))));
            vals.push(v);
        }
        let mut out = insertion_tree(&[0], 1, &pieces, &vals);
        for (x, bound) in lets.into_iter().rev() {
            out = Expr::let_in(x, bound, out);
        }
        out
    }
}

fn insertion_tree(order: &[usize], next: usize, pieces: &[String], vals: &[String]) -> Expr {
    if next == pieces.len() {
        return Expr::Tuple(order.iter().map(|&i| Expr::var(pieces[i].clone())).collect());
    }
    insert_at(order, next, 0, pieces, vals)
}

fn insert_at(order: &[usize], j: usize, pos: usize, pieces: &[String], vals: &[String]) -> Expr {
    let placed = |at: usize| {
        let mut o = order.to_vec();
        o.insert(at, j);
        insertion_tree(&o, j + 1, pieces, vals)
    };
    if pos == order.len() {
        return placed(pos);
    }
    let guard = Expr::op(
        Op::Ge,
        vec![Expr::var(vals[order[pos]].clone()), Expr::var(vals[j].clone())],
    );
    Expr::ite(guard, insert_at(order, j, pos + 1, pieces, vals), placed(pos))
}

fn binders(e: &SExpr) -> Vec<&str> {
    let mut out = Vec::new();
    collect_binders(e, &mut out);
    out
}

fn collect_binders<'a>(e: &'a SExpr, out: &mut Vec<&'a str>) {
    let mut visit = |c: &'a SExpr| collect_binders(c, out);
    match &e.kind {
        SKind::Num(_) | SKind::Bool(_) | SKind::IntervalLit(..) | SKind::Var(_) | SKind::Cake => {}
        SKind::Op(_, xs) | SKind::Tuple(xs) | SKind::Sort(_, xs) | SKind::Alloc(xs) | SKind::Call(_, xs) => {
            xs.iter().for_each(visit)
        }
        SKind::Let(p, a, b) => {
            visit(a);
            visit(b);
            out.extend(p.binders());
        }
        SKind::If(a, b, c) => {
            visit(a);
            visit(b);
            visit(c);
        }
        SKind::Piece(a, _) | SKind::Left(a) | SKind::Right(a) | SKind::Eval(_, a) => visit(a),
        SKind::Divide(a, b) | SKind::Mark(_, a, b) => {
            visit(a);
            visit(b);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn core(src: &str) -> Expr {
        desugar(&parse(src).unwrap()).expr
    }

    #[test]
    fn tuple_let_binds_before_projecting() {
        let e = core("agents 2\nlet (A, B) = divide(cake, 1/2) in (A, B)");
        let expected = Expr::let_in(
            "$h1",
            Expr::divide(Expr::Cake, Expr::real(crate::ast::rat(1, 2))),
            Expr::let_in(
                "A",
                Expr::proj(1, Expr::var("$h1")),
                Expr::let_in(
                    "B",
                    Expr::proj(2, Expr::var("$h1")),
                    Expr::Tuple(vec![Expr::var("A"), Expr::var("B")]),
                ),
            ),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn sort2_shape() {
        let e = core("agents 2\nlet (I1, I2) = divide(cake, 1/2) in sort_1(I1, I2)");
        let Expr::Let(_, _, e) = e else { panic!() };
        let Expr::Let(_, _, e) = *e else { panic!() };
        let Expr::Let(_, _, e) = *e else { panic!() };
        let a1 = AgentId::new(1).unwrap();
        let expected = Expr::let_in(
            "$v2",
            Expr::eval(a1, Expr::var("I1")),
            Expr::let_in(
                "$v3",
                Expr::eval(a1, Expr::var("I2")),
                Expr::ite(
                    Expr::op(Op::Ge, vec![Expr::var("$v2"), Expr::var("$v3")]),
                    Expr::Tuple(vec![Expr::var("I1"), Expr::var("I2")]),
                    Expr::Tuple(vec![Expr::var("I2"), Expr::var("I1")]),
                ),
            ),
        );
        assert_eq!(*e, expected);
    }

    fn leaves(e: &Expr) -> usize {
        match e {
            Expr::If(_, t, f) => leaves(t) + leaves(f),
            Expr::Let(_, _, b) => leaves(b),
            _ => 1,
        }
    }

    #[test]
    fn sort_n_has_factorial_leaves() {
        let e = core("agents 1\nsort_1(cake, cake, cake, cake)");
        assert_eq!(leaves(&e), 24);
    }

    #[test]
    fn def_arguments_avoid_capture() {
        let src = "agents 1\ndef f(X) = let Y = cake in (X, Y);\nlet Y = [0, 1/2] in f(Y)";
        let e = core(src);
        // the argument Y must not be captured by the body's own Y
        let Expr::Let(_, _, body) = e else { panic!() };
        let Expr::Let(fresh, bound, _) = *body else { panic!() };
        assert!(fresh.starts_with('$'));
        assert_eq!(*bound, Expr::var("Y"));
    }

    #[test]
    fn agent_parameters_are_substituted() {
        let src = "agents 2\ndef g(agent P, X) = eval_P(X);\ng(2, cake)";
        let e = core(src);
        assert_eq!(
            e,
            Expr::let_in(
                "$a1",
                Expr::Cake,
                Expr::eval(AgentId::new(2).unwrap(), Expr::var("$a1"))
            )
        );
    }
}
