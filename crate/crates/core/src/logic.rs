//! Multi-sorted first-order terms and formulas over the valuation signature.
//!
//! Terms and formulas are reference-counted DAGs. Translation shares
//! subterms heavily, so every traversal here is memoized on node identity.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;

use crate::ast::{fmt_rational, AgentId, Interval, Op, Ty, Value};
use crate::valuation::PiecewiseValuation;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    /// Logical variable `y_k` introduced for a non-deterministic choice.
    Y(usize),
    /// Embedded program variable `x̂`.
    X(String),
    Ret,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub kind: VarKind,
    pub sort: Ty,
}

impl Var {
    pub fn y(k: usize, sort: Ty) -> Var {
        Var {
            kind: VarKind::Y(k),
            sort,
        }
    }

    pub fn x(name: impl Into<String>, sort: Ty) -> Var {
        Var {
            kind: VarKind::X(name.into()),
            sort,
        }
    }

    pub fn ret(sort: Ty) -> Var {
        Var {
            kind: VarKind::Ret,
            sort,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            VarKind::Y(k) => write!(f, "y{k}"),
            VarKind::X(x) => write!(f, "^{x}"),
            VarKind::Ret => write!(f, "ret"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Op(Op),
    Tuple,
    /// 1-based projection.
    Proj(usize),
    Ite,
    Left,
    Right,
    Interval,
    Nu(AgentId),
}

#[derive(Debug, PartialEq, Eq, Hash)]
pub enum TermNode {
    Var(Var),
    Const(Value),
    App(Func, Vec<Term>),
}

pub type Term = Rc<TermNode>;

pub fn var(v: Var) -> Term {
    Rc::new(TermNode::Var(v))
}

pub fn constant(v: Value) -> Term {
    Rc::new(TermNode::Const(v))
}

pub fn app(f: Func, args: Vec<Term>) -> Term {
    Rc::new(TermNode::App(f, args))
}

pub fn interval(lo: Term, hi: Term) -> Term {
    app(Func::Interval, vec![lo, hi])
}

pub fn nu(a: AgentId, piece: Term) -> Term {
    app(Func::Nu(a), vec![piece])
}

pub fn proj(k: usize, t: Term) -> Term {
    app(Func::Proj(k), vec![t])
}

pub fn left(t: Term) -> Term {
    app(Func::Left, vec![t])
}

pub fn right(t: Term) -> Term {
    app(Func::Right, vec![t])
}

pub fn ite(c: Term, a: Term, b: Term) -> Term {
    app(Func::Ite, vec![c, a, b])
}

fn numeric(t: &Ty) -> Ty {
    match t {
        Ty::Nat | Ty::Pos | Ty::Real => Ty::Real,
        Ty::Tuple(ts) => Ty::Tuple(ts.iter().map(numeric).collect()),
        other => other.clone(),
    }
}

/// Sort of a term with positions and naturals collapsed to ℝ.
pub fn sort_of(t: &Term) -> Ty {
    match &**t {
        TermNode::Var(v) => numeric(&v.sort),
        TermNode::Const(v) => numeric(&crate::typecheck::type_of_value(v)),
        TermNode::App(f, args) => match f {
            Func::Op(op) => match op {
                Op::Eq | Op::Ne | Op::Le | Op::Ge | Op::Lt | Op::Gt | Op::And | Op::Or | Op::Not => Ty::Bool,
                _ => Ty::Real,
            },
            Func::Tuple => Ty::Tuple(args.iter().map(sort_of).collect()),
            Func::Proj(k) => match sort_of(&args[0]) {
                Ty::Tuple(mut ts) if *k >= 1 && *k <= ts.len() => ts.swap_remove(*k - 1),
                other => panic!("projection {k} of non-tuple sort {other}"),
            },
            Func::Ite => sort_of(&args[1]),
            Func::Left | Func::Right | Func::Nu(_) => Ty::Real,
            Func::Interval => Ty::Interval,
        },
    }
}

#[derive(Debug, PartialEq, Eq, Hash)]
pub enum FormulaNode {
    True,
    False,
    Eq(Term, Term),
    Ge(Term, Term),
    Not(Formula),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Formula, Formula),
    Forall(Vec<Var>, Formula),
    Exists(Vec<Var>, Formula),
}

pub type Formula = Rc<FormulaNode>;

pub fn tt() -> Formula {
    Rc::new(FormulaNode::True)
}

pub fn ff() -> Formula {
    Rc::new(FormulaNode::False)
}

pub fn eq(a: Term, b: Term) -> Formula {
    Rc::new(FormulaNode::Eq(a, b))
}

pub fn ge(a: Term, b: Term) -> Formula {
    Rc::new(FormulaNode::Ge(a, b))
}

pub fn not(f: Formula) -> Formula {
    match &*f {
        FormulaNode::True => ff(),
        FormulaNode::False => tt(),
        _ => Rc::new(FormulaNode::Not(f)),
    }
}

/// Conjunction with `true` dropped and nested conjunctions flattened.
pub fn and(parts: Vec<Formula>) -> Formula {
    let mut out = Vec::new();
    for p in parts {
        match &*p {
            FormulaNode::True => {}
            FormulaNode::False => return ff(),
            FormulaNode::And(inner) => out.extend(inner.iter().cloned()),
            _ => out.push(p),
        }
    }
    match out.len() {
        0 => tt(),
        1 => out.pop().unwrap(),
        _ => Rc::new(FormulaNode::And(out)),
    }
}

pub fn or(parts: Vec<Formula>) -> Formula {
    let mut out = Vec::new();
    for p in parts {
        match &*p {
            FormulaNode::False => {}
            FormulaNode::True => return tt(),
            _ => out.push(p),
        }
    }
    match out.len() {
        0 => ff(),
        1 => out.pop().unwrap(),
        _ => Rc::new(FormulaNode::Or(out)),
    }
}

pub fn implies(a: Formula, b: Formula) -> Formula {
    match (&*a, &*b) {
        (FormulaNode::True, _) => b,
        (FormulaNode::False, _) | (_, FormulaNode::True) => tt(),
        _ => Rc::new(FormulaNode::Implies(a, b)),
    }
}

pub fn forall(vars: Vec<Var>, body: Formula) -> Formula {
    if vars.is_empty() || matches!(&*body, FormulaNode::True | FormulaNode::False) {
        body
    } else {
        Rc::new(FormulaNode::Forall(vars, body))
    }
}

pub fn exists(vars: Vec<Var>, body: Formula) -> Formula {
    if vars.is_empty() || matches!(&*body, FormulaNode::True | FormulaNode::False) {
        body
    } else {
        Rc::new(FormulaNode::Exists(vars, body))
    }
}

fn key<T>(rc: &Rc<T>) -> usize {
    Rc::as_ptr(rc) as usize
}

/// A list of substitutions `{t_1/x̂_1}…{t_n/x̂_n}`, applied left to right.
#[derive(Clone, Debug, Default)]
pub struct Substitution {
    entries: Vec<(String, Term)>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    /// `{t/x̂}` followed by `self`.
    pub fn prepend(&self, x: impl Into<String>, t: Term) -> Substitution {
        let mut entries = vec![(x.into(), t)];
        entries.extend(self.entries.iter().cloned());
        Substitution { entries }
    }

    /// `self` followed by `{t/x̂}`.
    pub fn then(mut self, x: impl Into<String>, t: Term) -> Substitution {
        self.entries.push((x.into(), t));
        self
    }

    pub fn entries(&self) -> &[(String, Term)] {
        &self.entries
    }

    pub fn domain(&self) -> BTreeSet<String> {
        self.entries.iter().map(|(x, _)| x.clone()).collect()
    }

    /// Largest `k` with `y_k` free in some substituted term.
    pub fn max_y(&self) -> usize {
        self.entries
            .iter()
            .flat_map(|(_, t)| free_vars_term(t))
            .filter_map(|v| match v.kind {
                VarKind::Y(k) => Some(k),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn apply_term(&self, t: &Term) -> Term {
        Applier::new(self).term(0, t)
    }

    pub fn apply(&self, f: &Formula) -> Formula {
        Applier::new(self).formula(0, f)
    }
}

struct Applier<'s> {
    subst: &'s Substitution,
    terms: HashMap<(usize, usize), Term>,
    formulas: HashMap<usize, Formula>,
}

impl<'s> Applier<'s> {
    fn new(subst: &'s Substitution) -> Self {
        Applier {
            subst,
            terms: HashMap::new(),
            formulas: HashMap::new(),
        }
    }

    /// Applies entries `from..` to `t`. A hit on entry `j` continues with
    /// entries after `j` on the substituted term.
    fn term(&mut self, from: usize, t: &Term) -> Term {
        if let Some(done) = self.terms.get(&(from, key(t))) {
            return done.clone();
        }
        let out = match &**t {
            TermNode::Var(Var {
                kind: VarKind::X(x), ..
            }) => match self.subst.entries[from..].iter().position(|(y, _)| y == x) {
                Some(off) => {
                    let j = from + off;
                    let replacement = self.subst.entries[j].1.clone();
                    self.term(j + 1, &replacement)
                }
                None => t.clone(),
            },
            TermNode::Var(_) | TermNode::Const(_) => t.clone(),
            TermNode::App(f, args) => {
                let new: Vec<Term> = args.iter().map(|a| self.term(from, a)).collect();
                if new.iter().zip(args).all(|(n, o)| Rc::ptr_eq(n, o)) {
                    t.clone()
                } else {
                    app(f.clone(), new)
                }
            }
        };
        self.terms.insert((from, key(t)), out.clone());
        out
    }

    fn formula(&mut self, from: usize, f: &Formula) -> Formula {
        if let Some(done) = self.formulas.get(&key(f)) {
            return done.clone();
        }
        let out = match &**f {
            FormulaNode::True | FormulaNode::False => f.clone(),
            FormulaNode::Eq(a, b) => eq(self.term(from, a), self.term(from, b)),
            FormulaNode::Ge(a, b) => ge(self.term(from, a), self.term(from, b)),
            FormulaNode::Not(g) => Rc::new(FormulaNode::Not(self.formula(from, g))),
            FormulaNode::And(gs) => Rc::new(FormulaNode::And(gs.iter().map(|g| self.formula(from, g)).collect())),
            FormulaNode::Or(gs) => Rc::new(FormulaNode::Or(gs.iter().map(|g| self.formula(from, g)).collect())),
            FormulaNode::Implies(a, b) => Rc::new(FormulaNode::Implies(self.formula(from, a), self.formula(from, b))),
            // bound variables are y's or ret, which substitutions never touch
            FormulaNode::Forall(vs, g) => Rc::new(FormulaNode::Forall(vs.clone(), self.formula(from, g))),
            FormulaNode::Exists(vs, g) => Rc::new(FormulaNode::Exists(vs.clone(), self.formula(from, g))),
        };
        self.formulas.insert(key(f), out.clone());
        out
    }
}

pub fn free_vars_term(t: &Term) -> BTreeSet<Var> {
    let mut out = BTreeSet::new();
    let mut seen = std::collections::HashSet::new();
    collect_term(t, &mut seen, &mut out);
    out
}

fn collect_term(t: &Term, seen: &mut std::collections::HashSet<usize>, out: &mut BTreeSet<Var>) {
    if !seen.insert(key(t)) {
        return;
    }
    match &**t {
        TermNode::Var(v) => {
            out.insert(v.clone());
        }
        TermNode::Const(_) => {}
        TermNode::App(_, args) => args.iter().for_each(|a| collect_term(a, seen, out)),
    }
}

/// Free variables of a formula, respecting quantifier scope.
pub fn free_vars(f: &Formula) -> BTreeSet<Var> {
    let mut memo: HashMap<usize, Rc<BTreeSet<Var>>> = HashMap::new();
    let mut term_memo: HashMap<usize, Rc<BTreeSet<Var>>> = HashMap::new();
    (*fv_formula(f, &mut memo, &mut term_memo)).clone()
}

fn fv_term_memo(t: &Term, memo: &mut HashMap<usize, Rc<BTreeSet<Var>>>) -> Rc<BTreeSet<Var>> {
    if let Some(s) = memo.get(&key(t)) {
        return s.clone();
    }
    let out = match &**t {
        TermNode::Var(v) => Rc::new(BTreeSet::from([v.clone()])),
        TermNode::Const(_) => Rc::new(BTreeSet::new()),
        TermNode::App(_, args) => {
            let mut s = BTreeSet::new();
            for a in args {
                s.extend(fv_term_memo(a, memo).iter().cloned());
            }
            Rc::new(s)
        }
    };
    memo.insert(key(t), out.clone());
    out
}

fn fv_formula(
    f: &Formula,
    memo: &mut HashMap<usize, Rc<BTreeSet<Var>>>,
    tm: &mut HashMap<usize, Rc<BTreeSet<Var>>>,
) -> Rc<BTreeSet<Var>> {
    if let Some(s) = memo.get(&key(f)) {
        return s.clone();
    }
    let mut s = BTreeSet::new();
    match &**f {
        FormulaNode::True | FormulaNode::False => {}
        FormulaNode::Eq(a, b) | FormulaNode::Ge(a, b) => {
            s.extend(fv_term_memo(a, tm).iter().cloned());
            s.extend(fv_term_memo(b, tm).iter().cloned());
        }
        FormulaNode::Not(g) => s.extend(fv_formula(g, memo, tm).iter().cloned()),
        FormulaNode::And(gs) | FormulaNode::Or(gs) => {
            for g in gs {
                s.extend(fv_formula(g, memo, tm).iter().cloned());
            }
        }
        FormulaNode::Implies(a, b) => {
            s.extend(fv_formula(a, memo, tm).iter().cloned());
            s.extend(fv_formula(b, memo, tm).iter().cloned());
        }
        FormulaNode::Forall(vs, g) | FormulaNode::Exists(vs, g) => {
            let bound: BTreeSet<&VarKind> = vs.iter().map(|v| &v.kind).collect();
            s.extend(
                fv_formula(g, memo, tm)
                    .iter()
                    .filter(|v| !bound.contains(&v.kind))
                    .cloned(),
            );
        }
    }
    let s = Rc::new(s);
    memo.insert(key(f), s.clone());
    s
}

/// Number of distinct nodes in the formula DAG, terms included.
pub fn dag_size(f: &Formula) -> usize {
    let mut seen = std::collections::HashSet::new();
    fn term(t: &Term, seen: &mut std::collections::HashSet<usize>) {
        if !seen.insert(key(t)) {
            return;
        }
        if let TermNode::App(_, args) = &**t {
            args.iter().for_each(|a| term(a, seen));
        }
    }
    fn formula(f: &Formula, seen: &mut std::collections::HashSet<usize>) {
        if !seen.insert(key(f)) {
            return;
        }
        match &**f {
            FormulaNode::True | FormulaNode::False => {}
            FormulaNode::Eq(a, b) | FormulaNode::Ge(a, b) => {
                term(a, seen);
                term(b, seen);
            }
            FormulaNode::Not(g) | FormulaNode::Forall(_, g) | FormulaNode::Exists(_, g) => formula(g, seen),
            FormulaNode::And(gs) | FormulaNode::Or(gs) => gs.iter().for_each(|g| formula(g, seen)),
            FormulaNode::Implies(a, b) => {
                formula(a, seen);
                formula(b, seen);
            }
        }
    }
    formula(f, &mut seen);
    seen.len()
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum InterpretError {
    #[error("free variable {0} has no value")]
    Unassigned(String),
    #[error("quantifiers are outside the evaluable fragment")]
    Quantified,
    #[error("ill-sorted term {0}")]
    IllSorted(String),
    #[error("interval with endpoints {0} is not a sub-interval of [0, 1]")]
    MalformedInterval(String),
}

pub type Assignment = HashMap<VarKind, Value>;

/// Evaluates a quantifier-free formula in the interpretation fixed by `profile`.
pub fn interpret(f: &Formula, profile: &[PiecewiseValuation], assignment: &Assignment) -> Result<bool, InterpretError> {
    Interp {
        profile,
        assignment,
        terms: HashMap::new(),
        formulas: HashMap::new(),
    }
    .formula(f)
}

/// Evaluates a single term.
pub fn interpret_term(
    t: &Term,
    profile: &[PiecewiseValuation],
    assignment: &Assignment,
) -> Result<Value, InterpretError> {
    Interp {
        profile,
        assignment,
        terms: HashMap::new(),
        formulas: HashMap::new(),
    }
    .term(t)
}

struct Interp<'a> {
    profile: &'a [PiecewiseValuation],
    assignment: &'a Assignment,
    terms: HashMap<usize, Value>,
    formulas: HashMap<usize, bool>,
}

impl Interp<'_> {
    fn term(&mut self, t: &Term) -> Result<Value, InterpretError> {
        if let Some(v) = self.terms.get(&key(t)) {
            return Ok(v.clone());
        }
        let ill = || InterpretError::IllSorted(t.to_string());
        let v = match &**t {
            TermNode::Var(v) => self
                .assignment
                .get(&v.kind)
                .cloned()
                .ok_or_else(|| InterpretError::Unassigned(v.to_string()))?,
            TermNode::Const(c) => c.clone(),
            TermNode::App(Func::Ite, args) => {
                let c = self.term(&args[0])?.as_bool().ok_or_else(ill)?;
                self.term(if c { &args[1] } else { &args[2] })?
            }
            TermNode::App(f, args) => {
                let vals = args.iter().map(|a| self.term(a)).collect::<Result<Vec<_>, _>>()?;
                match f {
                    Func::Op(op) => op.apply(&vals).ok_or_else(ill)?,
                    Func::Tuple => Value::Tuple(vals),
                    Func::Proj(k) => match &vals[0] {
                        Value::Tuple(vs) if *k >= 1 && *k <= vs.len() => vs[*k - 1].clone(),
                        _ => return Err(ill()),
                    },
                    Func::Left => Value::Real(vals[0].as_interval().ok_or_else(ill)?.lo().clone()),
                    Func::Right => Value::Real(vals[0].as_interval().ok_or_else(ill)?.hi().clone()),
                    Func::Interval => {
                        let lo = vals[0].as_number().ok_or_else(ill)?;
                        let hi = vals[1].as_number().ok_or_else(ill)?;
                        let shown = format!("{}, {}", fmt_rational(&lo), fmt_rational(&hi));
                        Value::Interval(Interval::new(lo, hi).ok_or(InterpretError::MalformedInterval(shown))?)
                    }
                    Func::Nu(a) => {
                        let piece = vals[0].as_interval().ok_or_else(ill)?;
                        let v = self.profile.get(a.slot()).ok_or_else(ill)?;
                        Value::Real(v.value_of(piece))
                    }
                    Func::Ite => unreachable!(),
                }
            }
        };
        self.terms.insert(key(t), v.clone());
        Ok(v)
    }

    fn formula(&mut self, f: &Formula) -> Result<bool, InterpretError> {
        if let Some(b) = self.formulas.get(&key(f)) {
            return Ok(*b);
        }
        let b = match &**f {
            FormulaNode::True => true,
            FormulaNode::False => false,
            FormulaNode::Eq(a, b) => self.term(a)?.semantic_eq(&self.term(b)?),
            FormulaNode::Ge(a, b) => {
                let (x, y) = (self.term(a)?, self.term(b)?);
                match (x.as_number(), y.as_number()) {
                    (Some(x), Some(y)) => x >= y,
                    _ => return Err(InterpretError::IllSorted(f.to_string())),
                }
            }
            FormulaNode::Not(g) => !self.formula(g)?,
            FormulaNode::And(gs) => {
                let mut all = true;
                for g in gs {
                    if !self.formula(g)? {
                        all = false;
                        break;
                    }
                }
                all
            }
            FormulaNode::Or(gs) => {
                let mut any = false;
                for g in gs {
                    if self.formula(g)? {
                        any = true;
                        break;
                    }
                }
                any
            }
            FormulaNode::Implies(a, b) => !self.formula(a)? || self.formula(b)?,
            FormulaNode::Forall(..) | FormulaNode::Exists(..) => return Err(InterpretError::Quantified),
        };
        self.formulas.insert(key(f), b);
        Ok(b)
    }
}

impl fmt::Display for TermNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, args: &[Term]| -> fmt::Result {
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{a}")?;
            }
            Ok(())
        };
        match self {
            TermNode::Var(v) => write!(f, "{v}"),
            TermNode::Const(c) => write!(f, "{c}"),
            TermNode::App(func, args) => match func {
                Func::Op(Op::Not) => write!(f, "!({})", args[0]),
                Func::Op(Op::DivBy(c)) => write!(f, "({} / {})", args[0], fmt_rational(c)),
                Func::Op(op) => write!(f, "({} {} {})", args[0], op.symbol(), args[1]),
                Func::Tuple => {
                    write!(f, "(")?;
                    list(f, args)?;
                    write!(f, ")")
                }
                Func::Proj(k) => write!(f, "π{k}({})", args[0]),
                Func::Ite => write!(f, "ite({}, {}, {})", args[0], args[1], args[2]),
                Func::Left => write!(f, "ℓ({})", args[0]),
                Func::Right => write!(f, "r({})", args[0]),
                Func::Interval => write!(f, "[{}, {}]", args[0], args[1]),
                Func::Nu(a) => write!(f, "ν{a}({})", args[0]),
            },
        }
    }
}

impl fmt::Display for FormulaNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, gs: &[Formula], sep: &str| -> fmt::Result {
            write!(f, "(")?;
            for (i, g) in gs.iter().enumerate() {
                if i > 0 {
                    write!(f, " {sep} ")?;
                }
                write!(f, "{g}")?;
            }
            write!(f, ")")
        };
        let vars = |vs: &[Var]| vs.iter().map(Var::to_string).collect::<Vec<_>>().join(" ");
        match self {
            FormulaNode::True => write!(f, "true"),
            FormulaNode::False => write!(f, "false"),
            FormulaNode::Eq(a, b) => write!(f, "{a} = {b}"),
            FormulaNode::Ge(a, b) => write!(f, "{a} ≥ {b}"),
            FormulaNode::Not(g) => write!(f, "¬({g})"),
            FormulaNode::And(gs) => join(f, gs, "∧"),
            FormulaNode::Or(gs) => join(f, gs, "∨"),
            FormulaNode::Implies(a, b) => write!(f, "({a} ⇒ {b})"),
            FormulaNode::Forall(vs, g) => write!(f, "∀{}. {g}", vars(vs)),
            FormulaNode::Exists(vs, g) => write!(f, "∃{}. {g}", vars(vs)),
        }
    }
}
