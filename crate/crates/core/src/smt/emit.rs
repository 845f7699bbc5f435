use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::rc::Rc;

use num_traits::{One, Signed};

use super::{AxiomMode, SolverConfig};
use crate::ast::{AgentId, Op, Rational, Ty, Value};
use crate::logic::{Formula, FormulaNode, Func, Term, TermNode, Var, VarKind};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EmitError {
    #[error("cannot lower `{0}` to SMT-LIB")]
    Unsupported(String),
}

/// Renders `goal` and `axioms` as one SMT-LIB 2 script.
///
/// Tuples and intervals are flattened into scalar components, `ν_a` becomes
/// `nu_a : Real Real -> Real`, existentials in positive position become
/// constants, and shared subterms are named with `define-fun`.
pub fn emit(goal: &Formula, axioms: &[Formula], cfg: &SolverConfig) -> Result<String, EmitError> {
    let mut em = Emitter::new();
    for f in std::iter::once(goal).chain(axioms) {
        em.count_refs(f);
    }
    let goal_text = em.formula(goal, GLOBAL, Pol::Pos)?;
    let mut axiom_text = Vec::new();
    let ground = cfg.axioms == AxiomMode::Ground;
    if ground {
        axiom_text.extend(em.ground_constraints(cfg.endpoint_axioms));
    } else {
        for ax in axioms {
            axiom_text.push((*em.formula(ax, GLOBAL, Pol::Pos)?).clone());
        }
    }

    let mut out = String::new();
    out.push_str("(set-option :produce-models true)\n");
    let _ = writeln!(out, "(set-logic {})", cfg.logic);
    for a in &em.agents {
        let i = a.index();
        if ground {
            let _ = writeln!(out, "(declare-fun F_{i} (Real) Real)");
            let _ = writeln!(
                out,
                "(define-fun nu_{i} ((l Real) (r Real)) Real (- (F_{i} r) (F_{i} l)))"
            );
        } else {
            let _ = writeln!(out, "(declare-fun nu_{i} (Real Real) Real)");
        }
    }
    for d in &em.decls {
        out.push_str(d);
        out.push('\n');
    }
    for d in &em.defs {
        out.push_str(d);
        out.push('\n');
    }
    for g in &em.guards {
        let _ = writeln!(out, "(assert {g})");
    }
    for a in &axiom_text {
        let _ = writeln!(out, "(assert {a})");
    }
    let _ = writeln!(out, "(assert {goal_text})");
    out.push_str("(check-sat)\n(get-model)\n");
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Pol {
    Pos,
    Neg,
    /// Under a quantifier that stays in the script.
    Inside,
}

impl Pol {
    fn flip(self) -> Pol {
        match self {
            Pol::Pos => Pol::Neg,
            Pol::Neg => Pol::Pos,
            Pol::Inside => Pol::Inside,
        }
    }
}

const GLOBAL: usize = 0;

struct Scope {
    parent: Option<usize>,
    vars: HashMap<VarKind, Rc<Vec<String>>>,
    /// Inside a script-level quantifier: no `define-fun` naming.
    inline: bool,
}

struct Emitter {
    refs: HashMap<usize, u32>,
    tys: HashMap<usize, Ty>,
    quantified: HashMap<usize, bool>,
    scopes: Vec<Scope>,
    terms: HashMap<(usize, usize), Rc<Vec<String>>>,
    formulas: HashMap<(usize, usize, Pol), Rc<String>>,
    used: HashSet<String>,
    decls: Vec<String>,
    defs: Vec<String>,
    guards: Vec<String>,
    agents: BTreeSet<AgentId>,
    endpoints: Vec<(AgentId, String)>,
    inline_nu: BTreeSet<AgentId>,
    next_def: usize,
    next_quant: usize,
}

fn key<T>(rc: &Rc<T>) -> usize {
    Rc::as_ptr(rc) as usize
}

fn numeric(t: &Ty) -> Ty {
    match t {
        Ty::Nat | Ty::Pos | Ty::Real => Ty::Real,
        Ty::Tuple(ts) => Ty::Tuple(ts.iter().map(numeric).collect()),
        other => other.clone(),
    }
}

fn width(t: &Ty) -> usize {
    match t {
        Ty::Interval => 2,
        Ty::Tuple(ts) => ts.iter().map(width).sum(),
        _ => 1,
    }
}

/// Component name suffixes and SMT sorts of a flattened type.
fn components(t: &Ty, prefix: &str, out: &mut Vec<(String, &'static str)>) {
    match t {
        Ty::Bool => out.push((prefix.to_string(), "Bool")),
        Ty::Nat | Ty::Real | Ty::Pos => out.push((prefix.to_string(), "Real")),
        Ty::Interval => {
            out.push((format!("{prefix}_lo"), "Real"));
            out.push((format!("{prefix}_hi"), "Real"));
        }
        Ty::Tuple(ts) => {
            for (i, t) in ts.iter().enumerate() {
                components(t, &format!("{prefix}_{}", i + 1), out);
            }
        }
    }
}

/// Range guards for flattened components of a variable of type `t`.
fn guards(t: &Ty, names: &[String], out: &mut Vec<String>) {
    fn go<'a>(t: &Ty, names: &mut impl Iterator<Item = &'a String>, out: &mut Vec<String>) {
        match t {
            Ty::Bool | Ty::Nat | Ty::Real => {
                names.next();
            }
            Ty::Pos => {
                let x = names.next().unwrap();
                out.push(format!("(and (<= 0.0 {x}) (<= {x} 1.0))"));
            }
            Ty::Interval => {
                let lo = names.next().unwrap();
                let hi = names.next().unwrap();
                out.push(format!("(and (<= 0.0 {lo}) (<= {lo} {hi}) (<= {hi} 1.0))"));
            }
            Ty::Tuple(ts) => ts.iter().for_each(|t| go(t, names, out)),
        }
    }
    go(t, &mut names.iter(), out)
}

/// Inverse of [`numeral`].
fn literal(s: &str) -> Option<Rational> {
    if let Some(inner) = s.strip_prefix("(- ").and_then(|r| r.strip_suffix(')')) {
        return literal(inner).map(|r| -r);
    }
    let int = |t: &str| t.strip_suffix(".0")?.parse::<num_bigint::BigInt>().ok();
    if let Some(frac) = s.strip_prefix("(/ ").and_then(|r| r.strip_suffix(')')) {
        let (n, d) = frac.split_once(' ')?;
        return Some(Rational::new(int(n)?, int(d)?));
    }
    int(s).map(Rational::from_integer)
}

pub(crate) fn numeral(r: &Rational) -> String {
    let body = |r: &Rational| {
        if r.denom().is_one() {
            format!("{}.0", r.numer())
        } else {
            format!("(/ {}.0 {}.0)", r.numer(), r.denom())
        }
    };
    if r.is_negative() {
        format!("(- {})", body(&-r))
    } else {
        body(r)
    }
}

fn base_name(kind: &VarKind) -> String {
    match kind {
        VarKind::Y(k) => format!("y{k}"),
        VarKind::Ret => "ret".to_string(),
        VarKind::X(x) => {
            let mut s = String::from("x_");
            for c in x.chars() {
                match c {
                    '\'' => s.push_str("_p"),
                    c if c.is_ascii_alphanumeric() || c == '_' || c == '$' => s.push(c),
                    _ => s.push('_'),
                }
            }
            s
        }
    }
}

fn conj(parts: Vec<String>) -> String {
    match parts.len() {
        0 => "true".to_string(),
        1 => parts.into_iter().next().unwrap(),
        _ => format!("(and {})", parts.join(" ")),
    }
}

fn pairwise_eq(a: &[String], b: &[String]) -> String {
    conj(a.iter().zip(b).map(|(x, y)| format!("(= {x} {y})")).collect())
}

impl Emitter {
    fn new() -> Self {
        Emitter {
            refs: HashMap::new(),
            tys: HashMap::new(),
            quantified: HashMap::new(),
            scopes: vec![Scope {
                parent: None,
                vars: HashMap::new(),
                inline: false,
            }],
            terms: HashMap::new(),
            formulas: HashMap::new(),
            used: HashSet::new(),
            decls: Vec::new(),
            defs: Vec::new(),
            guards: Vec::new(),
            agents: BTreeSet::new(),
            endpoints: Vec::new(),
            inline_nu: BTreeSet::new(),
            next_def: 0,
            next_quant: 0,
        }
    }

    fn count_refs(&mut self, f: &Formula) {
        let mut seen = HashSet::new();
        self.refs_formula(f, &mut seen);
    }

    fn bump(&mut self, k: usize, seen: &mut HashSet<usize>) -> bool {
        *self.refs.entry(k).or_insert(0) += 1;
        seen.insert(k)
    }

    fn refs_term(&mut self, t: &Term, seen: &mut HashSet<usize>) {
        if !self.bump(key(t), seen) {
            return;
        }
        if let TermNode::App(_, args) = &**t {
            for a in args {
                self.refs_term(a, seen);
            }
        }
    }

    fn refs_formula(&mut self, f: &Formula, seen: &mut HashSet<usize>) {
        if !self.bump(key(f), seen) {
            return;
        }
        match &**f {
            FormulaNode::True | FormulaNode::False => {}
            FormulaNode::Eq(a, b) | FormulaNode::Ge(a, b) => {
                self.refs_term(a, seen);
                self.refs_term(b, seen);
            }
            FormulaNode::Not(g) | FormulaNode::Forall(_, g) | FormulaNode::Exists(_, g) => self.refs_formula(g, seen),
            FormulaNode::And(gs) | FormulaNode::Or(gs) => {
                for g in gs {
                    self.refs_formula(g, seen);
                }
            }
            FormulaNode::Implies(a, b) => {
                self.refs_formula(a, seen);
                self.refs_formula(b, seen);
            }
        }
    }

    fn shared(&self, k: usize) -> bool {
        self.refs.get(&k).copied().unwrap_or(0) > 1
    }

    fn has_quantifier(&mut self, f: &Formula) -> bool {
        if let Some(&b) = self.quantified.get(&key(f)) {
            return b;
        }
        let b = match &**f {
            FormulaNode::Forall(..) | FormulaNode::Exists(..) => true,
            FormulaNode::Not(g) => self.has_quantifier(g),
            FormulaNode::And(gs) | FormulaNode::Or(gs) => gs.iter().any(|g| self.has_quantifier(g)),
            FormulaNode::Implies(a, b) => self.has_quantifier(a) || self.has_quantifier(b),
            _ => false,
        };
        self.quantified.insert(key(f), b);
        b
    }

    fn ty(&mut self, t: &Term) -> Result<Ty, EmitError> {
        if let Some(ty) = self.tys.get(&key(t)) {
            return Ok(ty.clone());
        }
        let ty = match &**t {
            TermNode::Var(v) => numeric(&v.sort),
            TermNode::Const(c) => numeric(&crate::typecheck::type_of_value(c)),
            TermNode::App(f, args) => match f {
                Func::Op(op) => match op {
                    Op::Eq | Op::Ne | Op::Le | Op::Ge | Op::Lt | Op::Gt | Op::And | Op::Or | Op::Not => Ty::Bool,
                    _ => Ty::Real,
                },
                Func::Tuple => Ty::Tuple(args.iter().map(|a| self.ty(a)).collect::<Result<_, _>>()?),
                Func::Proj(k) => match self.ty(&args[0])? {
                    Ty::Tuple(mut ts) if *k >= 1 && *k <= ts.len() => ts.swap_remove(*k - 1),
                    _ => return Err(EmitError::Unsupported(t.to_string())),
                },
                Func::Ite => self.ty(&args[1])?,
                Func::Left | Func::Right | Func::Nu(_) => Ty::Real,
                Func::Interval => Ty::Interval,
            },
        };
        self.tys.insert(key(t), ty.clone());
        Ok(ty)
    }

    fn fresh_base(&mut self, kind: &VarKind, prefix: Option<String>) -> String {
        let base = base_name(kind);
        if let Some(p) = prefix {
            let name = format!("{p}_{base}");
            self.used.insert(name.clone());
            return name;
        }
        if self.used.insert(base.clone()) {
            return base;
        }
        let mut n = 2;
        loop {
            let name = format!("s{n}_{base}");
            if self.used.insert(name.clone()) {
                return name;
            }
            n += 1;
        }
    }

    /// Declares `v` as a constant in `scope`, asserting its range guards.
    fn declare(&mut self, v: &Var, scope: usize) -> Rc<Vec<String>> {
        let base = self.fresh_base(&v.kind, None);
        let mut comps = Vec::new();
        components(&v.sort, &base, &mut comps);
        for (name, sort) in &comps {
            self.decls.push(format!("(declare-const {name} {sort})"));
        }
        let names: Vec<String> = comps.into_iter().map(|(n, _)| n).collect();
        guards(&v.sort, &names, &mut self.guards);
        let names = Rc::new(names);
        self.scopes[scope].vars.insert(v.kind.clone(), names.clone());
        names
    }

    fn lookup(&mut self, v: &Var, scope: usize) -> Rc<Vec<String>> {
        let mut cur = Some(scope);
        while let Some(s) = cur {
            if let Some(names) = self.scopes[s].vars.get(&v.kind) {
                return names.clone();
            }
            cur = self.scopes[s].parent;
        }
        self.declare(v, GLOBAL)
    }

    fn child_scope(&mut self, parent: usize, inline: bool) -> usize {
        let inline = inline || self.scopes[parent].inline;
        self.scopes.push(Scope {
            parent: Some(parent),
            vars: HashMap::new(),
            inline,
        });
        self.scopes.len() - 1
    }

    fn name_term(&mut self, comps: Vec<String>, ty: &Ty) -> Vec<String> {
        self.next_def += 1;
        let mut sorts = Vec::new();
        components(ty, &format!("t{}", self.next_def), &mut sorts);
        sorts
            .into_iter()
            .zip(comps)
            .map(|((name, sort), body)| {
                self.defs.push(format!("(define-fun {name} () {sort} {body})"));
                name
            })
            .collect()
    }

    fn term(&mut self, t: &Term, scope: usize) -> Result<Rc<Vec<String>>, EmitError> {
        if let Some(done) = self.terms.get(&(key(t), scope)) {
            return Ok(done.clone());
        }
        let unsupported = || EmitError::Unsupported(t.to_string());
        let comps: Vec<String> = match &**t {
            TermNode::Var(v) => (*self.lookup(v, scope)).clone(),
            TermNode::Const(c) => {
                let mut out = Vec::new();
                flatten_value(c, &mut out);
                out
            }
            TermNode::App(f, args) => {
                let mut vals = Vec::with_capacity(args.len());
                if !matches!(f, Func::Nu(_)) {
                    for a in args {
                        vals.push(self.term(a, scope)?);
                    }
                }
                let one = |i: usize| -> Result<&String, EmitError> {
                    match vals[i].as_slice() {
                        [x] => Ok(x),
                        _ => Err(unsupported()),
                    }
                };
                match f {
                    Func::Op(op) => vec![match op {
                        Op::Eq => pairwise_eq(&vals[0], &vals[1]),
                        Op::Ne => format!("(not {})", pairwise_eq(&vals[0], &vals[1])),
                        Op::Le => format!("(<= {} {})", one(0)?, one(1)?),
                        Op::Ge => format!("(>= {} {})", one(0)?, one(1)?),
                        Op::Lt => format!("(< {} {})", one(0)?, one(1)?),
                        Op::Gt => format!("(> {} {})", one(0)?, one(1)?),
                        Op::Add => format!("(+ {} {})", one(0)?, one(1)?),
                        Op::Sub => format!("(- {} {})", one(0)?, one(1)?),
                        Op::Mul => format!("(* {} {})", one(0)?, one(1)?),
                        Op::DivBy(c) => format!("(/ {} {})", one(0)?, numeral(c)),
                        Op::And => format!("(and {} {})", one(0)?, one(1)?),
                        Op::Or => format!("(or {} {})", one(0)?, one(1)?),
                        Op::Not => format!("(not {})", one(0)?),
                    }],
                    Func::Tuple => vals.iter().flat_map(|v| v.iter().cloned()).collect(),
                    Func::Proj(k) => {
                        let Ty::Tuple(ts) = self.ty(&args[0])? else {
                            return Err(unsupported());
                        };
                        if *k == 0 || *k > ts.len() {
                            return Err(unsupported());
                        }
                        let start: usize = ts[..*k - 1].iter().map(width).sum();
                        vals[0][start..start + width(&ts[*k - 1])].to_vec()
                    }
                    Func::Ite => {
                        let c = one(0)?.clone();
                        if vals[1].len() != vals[2].len() {
                            return Err(unsupported());
                        }
                        vals[1]
                            .iter()
                            .zip(vals[2].iter())
                            .map(|(a, b)| {
                                if a == b {
                                    a.clone()
                                } else {
                                    format!("(ite {c} {a} {b})")
                                }
                            })
                            .collect()
                    }
                    Func::Left | Func::Right => match vals[0].as_slice() {
                        [lo, hi] => vec![if matches!(f, Func::Left) {
                            lo.clone()
                        } else {
                            hi.clone()
                        }],
                        _ => return Err(unsupported()),
                    },
                    Func::Interval => vec![one(0)?.clone(), one(1)?.clone()],
                    Func::Nu(a) => {
                        self.agents.insert(*a);
                        let piece = self.term(&args[0], scope)?;
                        match piece.as_slice() {
                            [lo, hi] => {
                                if self.scopes[scope].inline {
                                    self.inline_nu.insert(*a);
                                } else {
                                    self.endpoints.push((*a, lo.clone()));
                                    self.endpoints.push((*a, hi.clone()));
                                }
                                vec![format!("(nu_{} {lo} {hi})", a.index())]
                            }
                            _ => return Err(unsupported()),
                        }
                    }
                }
            }
        };
        let compound = matches!(&**t, TermNode::App(..)) && comps.iter().any(|c| c.starts_with('('));
        let comps = if compound && self.shared(key(t)) && !self.scopes[scope].inline {
            let ty = self.ty(t)?;
            self.name_term(comps, &ty)
        } else {
            comps
        };
        let comps = Rc::new(comps);
        self.terms.insert((key(t), scope), comps.clone());
        Ok(comps)
    }

    fn formula(&mut self, f: &Formula, scope: usize, pol: Pol) -> Result<Rc<String>, EmitError> {
        if let Some(done) = self.formulas.get(&(key(f), scope, pol)) {
            return Ok(done.clone());
        }
        let text = match &**f {
            FormulaNode::True => "true".to_string(),
            FormulaNode::False => "false".to_string(),
            FormulaNode::Eq(a, b) => {
                let (a, b) = (self.term(a, scope)?, self.term(b, scope)?);
                if a.len() != b.len() {
                    return Err(EmitError::Unsupported(f.to_string()));
                }
                pairwise_eq(&a, &b)
            }
            FormulaNode::Ge(a, b) => {
                let (a, b) = (self.term(a, scope)?, self.term(b, scope)?);
                match (a.as_slice(), b.as_slice()) {
                    ([x], [y]) => format!("(>= {x} {y})"),
                    _ => return Err(EmitError::Unsupported(f.to_string())),
                }
            }
            FormulaNode::Not(g) => format!("(not {})", self.formula(g, scope, pol.flip())?),
            FormulaNode::And(gs) | FormulaNode::Or(gs) => {
                let op = if matches!(&**f, FormulaNode::And(_)) {
                    "and"
                } else {
                    "or"
                };
                let mut s = format!("({op}");
                for g in gs {
                    s.push(' ');
                    s.push_str(&self.formula(g, scope, pol)?);
                }
                s.push(')');
                s
            }
            FormulaNode::Implies(a, b) => {
                let a = self.formula(a, scope, pol.flip())?;
                let b = self.formula(b, scope, pol)?;
                format!("(=> {a} {b})")
            }
            FormulaNode::Exists(vs, g) | FormulaNode::Forall(vs, g) => {
                let existential = matches!(&**f, FormulaNode::Exists(..));
                let skolemize = (existential && pol == Pol::Pos) || (!existential && pol == Pol::Neg);
                if skolemize && !self.scopes[scope].inline {
                    let inner = self.child_scope(scope, false);
                    for v in vs {
                        self.declare(v, inner);
                    }
                    (*self.formula(g, inner, pol)?).clone()
                } else {
                    self.quantifier(existential, vs, g, scope)?
                }
            }
        };
        let named = matches!(
            &**f,
            FormulaNode::Eq(..)
                | FormulaNode::Ge(..)
                | FormulaNode::Not(_)
                | FormulaNode::And(_)
                | FormulaNode::Or(_)
                | FormulaNode::Implies(..)
        ) && self.shared(key(f))
            && !self.scopes[scope].inline
            && !self.has_quantifier(f);
        let text = if named {
            self.next_def += 1;
            let name = format!("f{}", self.next_def);
            self.defs.push(format!("(define-fun {name} () Bool {text})"));
            name
        } else {
            text
        };
        let text = Rc::new(text);
        self.formulas.insert((key(f), scope, pol), text.clone());
        Ok(text)
    }

    fn quantifier(&mut self, existential: bool, vs: &[Var], body: &Formula, scope: usize) -> Result<String, EmitError> {
        self.next_quant += 1;
        let q = self.next_quant;
        let inner = self.child_scope(scope, true);
        let mut binders = Vec::new();
        let mut guard_list = Vec::new();
        for v in vs {
            let base = format!("q{q}_{}", base_name(&v.kind));
            let mut comps = Vec::new();
            components(&v.sort, &base, &mut comps);
            let names: Vec<String> = comps.iter().map(|(n, _)| n.clone()).collect();
            for (n, s) in &comps {
                binders.push(format!("({n} {s})"));
            }
            guards(&v.sort, &names, &mut guard_list);
            self.scopes[inner].vars.insert(v.kind.clone(), Rc::new(names));
        }
        let b = self.formula(body, inner, Pol::Inside)?;
        let g = conj(guard_list);
        Ok(if existential {
            if g == "true" {
                format!("(exists ({}) {b})", binders.join(" "))
            } else {
                format!("(exists ({}) (and {g} {b}))", binders.join(" "))
            }
        } else if g == "true" {
            format!("(forall ({}) {b})", binders.join(" "))
        } else {
            format!("(forall ({}) (=> {g} {b}))", binders.join(" "))
        })
    }

    /// Monotonicity of `F_a` over every pair of endpoints `ν_a` is applied to.
    fn ground_constraints(&self, strict: bool) -> Vec<String> {
        let rel = if strict { "<" } else { "<=" };
        let mut out = Vec::new();
        for a in &self.agents {
            let f = format!("F_{}", a.index());
            out.push(format!("(= ({f} 0.0) 0.0)"));
            out.push(format!("(= ({f} 1.0) 1.0)"));
            let mut seen = HashSet::new();
            let mut points: Vec<(String, Option<Rational>)> = Vec::new();
            let ends = ["0.0".to_string(), "1.0".to_string()];
            for p in ends
                .iter()
                .chain(self.endpoints.iter().filter(|(b, _)| b == a).map(|(_, p)| p))
            {
                if seen.insert(p.clone()) {
                    points.push((p.clone(), literal(p)));
                }
            }
            for (i, (p, lp)) in points.iter().enumerate() {
                for (q, lq) in &points[i + 1..] {
                    for ((x, lx), (y, ly)) in [((p, lp), (q, lq)), ((q, lq), (p, lp))] {
                        let mut premise = Vec::new();
                        match (lx, ly) {
                            (Some(u), Some(v)) => {
                                if u >= v || u.is_negative() || *v > Rational::one() {
                                    continue;
                                }
                            }
                            (Some(u), None) if *u >= Rational::one() => continue,
                            (None, Some(v)) if !v.is_positive() => continue,
                            _ => {
                                if lx.is_none() {
                                    premise.push(format!("(<= 0.0 {x})"));
                                }
                                premise.push(format!("(< {x} {y})"));
                                if ly.is_none() {
                                    premise.push(format!("(<= {y} 1.0)"));
                                }
                            }
                        }
                        let conclusion = format!("({rel} ({f} {x}) ({f} {y}))");
                        out.push(if premise.is_empty() {
                            conclusion
                        } else {
                            format!("(=> {} {conclusion})", conj(premise))
                        });
                    }
                }
            }
            if self.inline_nu.contains(a) {
                out.push(format!(
                    "(forall ((p Real) (q Real)) (=> (and (<= 0.0 p) (< p q) (<= q 1.0)) ({rel} ({f} p) ({f} q))))"
                ));
            }
        }
        out
    }
}

fn flatten_value(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Nat(n) => out.push(format!("{n}.0")),
        Value::Real(r) => out.push(numeral(r)),
        Value::Bool(b) => out.push(b.to_string()),
        Value::Interval(i) => {
            out.push(numeral(i.lo()));
            out.push(numeral(i.hi()));
        }
        Value::Tuple(vs) => vs.iter().for_each(|v| flatten_value(v, out)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{int, rat};
    use crate::logic::{constant, eq, exists, ff, tt, var};

    #[test]
    fn numerals_are_decimal() {
        assert_eq!(numeral(&int(1)), "1.0");
        assert_eq!(numeral(&rat(1, 2)), "(/ 1.0 2.0)");
        assert_eq!(numeral(&rat(-2, 3)), "(- (/ 2.0 3.0))");
        for r in [int(0), int(7), rat(1, 3), rat(-5, 2)] {
            assert_eq!(literal(&numeral(&r)), Some(r));
        }
        assert_eq!(literal("y1"), None);
    }

    #[test]
    fn trivial_goals() {
        let cfg = SolverConfig::default();
        let s = emit(&tt(), &[], &cfg).unwrap();
        assert!(s.contains("(assert true)"));
        assert!(s.ends_with("(check-sat)\n(get-model)\n"));
        let one_is_zero = eq(constant(Value::Real(int(1))), constant(Value::Real(int(0))));
        assert!(emit(&one_is_zero, &[], &cfg).unwrap().contains("(assert (= 1.0 0.0))"));
        assert!(emit(&ff(), &[], &cfg).unwrap().contains("(assert false)"));
    }

    #[test]
    fn existentials_become_guarded_constants() {
        let ret = Var::ret(Ty::Tuple(vec![Ty::Interval, Ty::Interval]));
        let cake = constant(Value::Interval(crate::ast::Interval::cake()));
        let f = exists(vec![ret.clone()], eq(crate::logic::proj(2, var(ret)), cake));
        let s = emit(&f, &[], &SolverConfig::default()).unwrap();
        assert!(s.contains("(declare-const ret_1_lo Real)"));
        assert!(s.contains("(declare-const ret_2_hi Real)"));
        assert!(s.contains("(assert (and (= ret_2_lo 0.0) (= ret_2_hi 1.0)))"));
        assert!(s.contains("(<= ret_1_lo ret_1_hi)"));
    }

    #[test]
    fn axioms_are_quantified_over_endpoints() {
        let cfg = SolverConfig {
            axioms: AxiomMode::Quantified,
            ..SolverConfig::default()
        };
        let s = emit(&tt(), &super::super::axioms(1), &cfg).unwrap();
        assert!(s.contains("(declare-fun nu_1 (Real Real) Real)"));
        assert!(s.contains("(assert (= (nu_1 0.0 1.0) 1.0))"));
        assert!(s.contains("(forall ((q1_x_I_lo Real) (q1_x_I_hi Real))"));
        assert_eq!(s.matches("(assert ").count(), 9);
    }

    #[test]
    fn ground_mode_constrains_only_used_endpoints() {
        let nu1 = |lo: Rational, hi: Term| {
            crate::logic::nu(
                AgentId::new(1).unwrap(),
                crate::logic::interval(constant(Value::Real(lo)), hi),
            )
        };
        let y = var(Var::y(1, Ty::Real));
        let f = eq(nu1(int(0), y.clone()), constant(Value::Real(rat(1, 2))));
        let strict = emit(&f, &super::super::axioms(1), &SolverConfig::default()).unwrap();
        assert!(strict.contains("(declare-fun F_1 (Real) Real)"));
        assert!(strict.contains("(assert (= (F_1 0.0) 0.0))"));
        assert!(strict.contains("(assert (=> (and (< 0.0 y1) (<= y1 1.0)) (< (F_1 0.0) (F_1 y1))))"));
        assert!(!strict.contains("forall"));
        let weak = SolverConfig {
            endpoint_axioms: false,
            ..SolverConfig::default()
        };
        let weak = emit(&f, &super::super::axioms_with(1, false), &weak).unwrap();
        assert!(weak.contains("(<= (F_1 0.0) (F_1 y1))"));
    }
}
