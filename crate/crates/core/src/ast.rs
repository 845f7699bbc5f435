//! Abstract syntax, runtime values and types shared by every stage.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Exact rational number. Reals in protocols and valuations never leave ℚ.
pub type Rational = BigRational;

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `p`, `p/q` or a plain decimal such as `0.25`.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((p, q)) = text.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(Rational::new(p, q));
    }
    if let Some((whole, frac)) = text.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let digits: BigInt = format!("{whole}{frac}").parse().ok()?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        return Some(Rational::new(digits, scale));
    }
    text.parse::<BigInt>().ok().map(Rational::from_integer)
}

/// `p/q` rendering used by every textual format in the crate.
pub fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// A 1-based agent index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentId(u32);

impl AgentId {
    pub fn new(index: u32) -> Option<Self> {
        (index >= 1).then_some(AgentId(index))
    }

    pub fn index(self) -> u32 {
        self.0
    }

    /// Zero-based position in a valuation profile.
    pub fn slot(self) -> usize {
        (self.0 - 1) as usize
    }

    pub fn is_valid_for(self, agent_count: u32) -> bool {
        self.0 <= agent_count
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A closed sub-interval `[lo, hi]` of the cake.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: Rational,
    hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Option<Self> {
        let in_unit = |r: &Rational| !r.is_negative() && *r <= Rational::one();
        (in_unit(&lo) && in_unit(&hi) && lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn cake() -> Self {
        Interval {
            lo: Rational::zero(),
            hi: Rational::one(),
        }
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    /// True when the open interiors of the two intervals intersect.
    pub fn interiors_overlap(&self, other: &Interval) -> bool {
        self.lo.clone().max(other.lo.clone()) < self.hi.clone().min(other.hi.clone())
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", fmt_rational(&self.lo), fmt_rational(&self.hi))
    }
}

/// Runtime values. Values never mention variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Nat(u64),
    Real(Rational),
    Bool(bool),
    Tuple(Vec<Value>),
    Interval(Interval),
}

impl Value {
    /// Numeric view; naturals embed into the reals.
    pub fn as_number(&self) -> Option<Rational> {
        match self {
            Value::Nat(n) => Some(Rational::from_integer(BigInt::from(*n))),
            Value::Real(r) => Some(r.clone()),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_interval(&self) -> Option<&Interval> {
        match self {
            Value::Interval(i) => Some(i),
            _ => None,
        }
    }

    /// Equality used by the `=` operator: numbers compare by value,
    /// everything else structurally.
    pub fn semantic_eq(&self, other: &Value) -> bool {
        match (self.as_number(), other.as_number()) {
            (Some(a), Some(b)) => a == b,
            _ => match (self, other) {
                (Value::Tuple(a), Value::Tuple(b)) => {
                    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.semantic_eq(y))
                }
                _ => self == other,
            },
        }
    }

    /// Whether the value inhabits `ty`, honouring ℕ ≤ ℝ and 𝔼 ≤ ℝ.
    pub fn has_type(&self, ty: &Ty) -> bool {
        match (self, ty) {
            (Value::Nat(_), Ty::Nat | Ty::Real) => true,
            (Value::Real(r), Ty::Pos) => !r.is_negative() && *r <= Rational::one(),
            (Value::Real(_), Ty::Real) => true,
            (Value::Bool(_), Ty::Bool) => true,
            (Value::Interval(_), Ty::Interval) => true,
            (Value::Tuple(vs), Ty::Tuple(ts)) => vs.len() == ts.len() && vs.iter().zip(ts).all(|(v, t)| v.has_type(t)),
            _ => false,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Nat(n) => write!(f, "{n}"),
            Value::Real(r) => write!(f, "{}", fmt_rational(r)),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Interval(i) => write!(f, "{i}"),
            Value::Tuple(vs) => {
                write!(f, "(")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Types: 𝔹, ℕ, ℝ, positions 𝔼 ⊆ [0,1], intervals 𝕀, and products.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ty {
    Bool,
    Nat,
    Real,
    Pos,
    Interval,
    Tuple(Vec<Ty>),
}

impl Ty {
    pub fn is_numeric(&self) -> bool {
        matches!(self, Ty::Nat | Ty::Real | Ty::Pos)
    }

    /// Subtyping: ℕ ≤ ℝ, 𝔼 ≤ ℝ, lifted componentwise through products.
    pub fn is_subtype_of(&self, other: &Ty) -> bool {
        match (self, other) {
            (a, b) if a == b => true,
            (Ty::Nat | Ty::Pos, Ty::Real) => true,
            (Ty::Tuple(a), Ty::Tuple(b)) => a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.is_subtype_of(y)),
            _ => false,
        }
    }

    /// Least upper bound, if the two types have one.
    pub fn join(&self, other: &Ty) -> Option<Ty> {
        if self.is_subtype_of(other) {
            return Some(other.clone());
        }
        if other.is_subtype_of(self) {
            return Some(self.clone());
        }
        match (self, other) {
            (a, b) if a.is_numeric() && b.is_numeric() => Some(Ty::Real),
            (Ty::Tuple(a), Ty::Tuple(b)) if a.len() == b.len() => a
                .iter()
                .zip(b)
                .map(|(x, y)| x.join(y))
                .collect::<Option<Vec<_>>>()
                .map(Ty::Tuple),
            _ => None,
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Bool => write!(f, "bool"),
            Ty::Nat => write!(f, "nat"),
            Ty::Real => write!(f, "real"),
            Ty::Pos => write!(f, "pos"),
            Ty::Interval => write!(f, "interval"),
            Ty::Tuple(ts) => {
                write!(f, "(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        write!(f, " * ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// The fixed primitive operator set.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Eq,
    Ne,
    Le,
    Ge,
    Lt,
    Gt,
    Add,
    Sub,
    Mul,
    /// Division by a fixed non-zero rational literal.
    DivBy(Rational),
    And,
    Or,
    Not,
}

impl Op {
    pub fn arity(&self) -> usize {
        match self {
            Op::DivBy(_) | Op::Not => 1,
            _ => 2,
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Op::Eq => "=",
            Op::Ne => "!=",
            Op::Le => "<=",
            Op::Ge => ">=",
            Op::Lt => "<",
            Op::Gt => ">",
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
            Op::DivBy(_) => "/",
            Op::And => "&&",
            Op::Or => "||",
            Op::Not => "!",
        }
    }

    /// Total semantics of the operator on values of the right shape.
    pub fn apply(&self, args: &[Value]) -> Option<Value> {
        let num = |i: usize| args.get(i).and_then(Value::as_number);
        let boolean = |i: usize| args.get(i).and_then(Value::as_bool);
        Some(match self {
            Op::Eq => Value::Bool(args[0].semantic_eq(&args[1])),
            Op::Ne => Value::Bool(!args[0].semantic_eq(&args[1])),
            Op::Le => Value::Bool(num(0)? <= num(1)?),
            Op::Ge => Value::Bool(num(0)? >= num(1)?),
            Op::Lt => Value::Bool(num(0)? < num(1)?),
            Op::Gt => Value::Bool(num(0)? > num(1)?),
            Op::Add => arith(&args[0], &args[1], |a, b| a + b)?,
            Op::Sub => Value::Real(num(0)? - num(1)?),
            Op::Mul => arith(&args[0], &args[1], |a, b| a * b)?,
            Op::DivBy(c) => Value::Real(num(0)? / c),
            Op::And => Value::Bool(boolean(0)? && boolean(1)?),
            Op::Or => Value::Bool(boolean(0)? || boolean(1)?),
            Op::Not => Value::Bool(!boolean(0)?),
        })
    }
}

fn arith(a: &Value, b: &Value, f: impl Fn(Rational, Rational) -> Rational) -> Option<Value> {
    match (a, b) {
        (Value::Nat(x), Value::Nat(y)) => {
            let r = f(int(*x as i64), int(*y as i64));
            Some(Value::Nat(r.to_integer().try_into().ok()?))
        }
        _ => Some(Value::Real(f(a.as_number()?, b.as_number()?))),
    }
}

/// Core expressions. Surface sugar (`alloc`, `sort`, tuple patterns,
/// abbreviations) is gone by the time a program reaches this form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Value(Value),
    Op(Op, Vec<Expr>),
    Var(String),
    Let(String, Box<Expr>, Box<Expr>),
    Tuple(Vec<Expr>),
    /// 1-based projection.
    Proj(usize, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Cake,
    Left(Box<Expr>),
    Right(Box<Expr>),
    Divide(Box<Expr>, Box<Expr>),
    Mark(AgentId, Box<Expr>, Box<Expr>),
    Eval(AgentId, Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn real(r: Rational) -> Expr {
        Expr::Value(Value::Real(r))
    }

    pub fn let_in(name: impl Into<String>, bound: Expr, body: Expr) -> Expr {
        Expr::Let(name.into(), Box::new(bound), Box::new(body))
    }

    pub fn proj(k: usize, e: Expr) -> Expr {
        Expr::Proj(k, Box::new(e))
    }

    pub fn ite(c: Expr, t: Expr, e: Expr) -> Expr {
        Expr::If(Box::new(c), Box::new(t), Box::new(e))
    }

    pub fn op(op: Op, args: Vec<Expr>) -> Expr {
        Expr::Op(op, args)
    }

    pub fn divide(piece: Expr, at: Expr) -> Expr {
        Expr::Divide(Box::new(piece), Box::new(at))
    }

    pub fn mark(agent: AgentId, from: Expr, target: Expr) -> Expr {
        Expr::Mark(agent, Box::new(from), Box::new(target))
    }

    pub fn eval(agent: AgentId, piece: Expr) -> Expr {
        Expr::Eval(agent, Box::new(piece))
    }

    /// Immediate subexpressions in evaluation order.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Value(_) | Expr::Var(_) | Expr::Cake => vec![],
            Expr::Op(_, args) | Expr::Tuple(args) => args.iter().collect(),
            Expr::Let(_, a, b) | Expr::Divide(a, b) | Expr::Mark(_, a, b) => vec![a, b],
            Expr::Proj(_, a) | Expr::Left(a) | Expr::Right(a) | Expr::Eval(_, a) => vec![a],
            Expr::If(c, t, e) => vec![c, t, e],
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn count_marks(&self) -> usize {
        let own = usize::from(matches!(self, Expr::Mark(..)));
        own + self.children().iter().map(|c| c.count_marks()).sum::<usize>()
    }

    /// Every agent subscript mentioned by a query.
    pub fn agents(&self) -> BTreeSet<AgentId> {
        let mut out = BTreeSet::new();
        self.collect_agents(&mut out);
        out
    }

    fn collect_agents(&self, out: &mut BTreeSet<AgentId>) {
        if let Expr::Mark(a, ..) | Expr::Eval(a, _) = self {
            out.insert(*a);
        }
        for c in self.children() {
            c.collect_agents(out);
        }
    }
}

impl fmt::Display for Expr {
    /// One-line rendering in surface-like syntax, used in diagnostics.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn operand(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match e {
                Expr::Value(Value::Real(r)) if !r.is_integer() => write!(f, "({e})"),
                Expr::Op(..) | Expr::Let(..) | Expr::If(..) => write!(f, "({e})"),
                _ => write!(f, "{e}"),
            }
        }
        fn list(items: &[&Expr], f: &mut fmt::Formatter<'_>) -> fmt::Result {
            for (i, e) in items.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{e}")?;
            }
            Ok(())
        }
        match self {
            Expr::Value(v) => write!(f, "{v}"),
            Expr::Var(x) => write!(f, "{x}"),
            Expr::Op(Op::Not, args) => {
                write!(f, "!")?;
                operand(&args[0], f)
            }
            Expr::Op(Op::DivBy(c), args) => {
                operand(&args[0], f)?;
                write!(f, " / ")?;
                operand(&Expr::real(c.clone()), f)
            }
            Expr::Op(op, args) => {
                operand(&args[0], f)?;
                write!(f, " {} ", op.symbol())?;
                operand(&args[1], f)
            }
            Expr::Let(x, a, b) => write!(f, "let {x} = {a} in {b}"),
            Expr::Tuple(items) => {
                write!(f, "(")?;
                list(&items.iter().collect::<Vec<_>>(), f)?;
                write!(f, ")")
            }
            Expr::Proj(k, e) => write!(f, "piece({e}, {k})"),
            Expr::If(c, t, e) => write!(f, "if {c} then {t} else {e}"),
            Expr::Cake => write!(f, "cake"),
            Expr::Left(e) => {
                write!(f, "left ")?;
                operand(e, f)
            }
            Expr::Right(e) => {
                write!(f, "right ")?;
                operand(e, f)
            }
            Expr::Divide(a, b) => write!(f, "divide({a}, {b})"),
            Expr::Mark(ag, a, b) => write!(f, "mark_{ag}({a}, {b})"),
            Expr::Eval(ag, a) => write!(f, "eval_{ag}({a})"),
        }
    }
}

/// Free program variables under let-binding scope.
pub fn fv(e: &Expr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_fv(e, &mut Vec::new(), &mut out);
    out
}

fn collect_fv<'a>(e: &'a Expr, bound: &mut Vec<&'a str>, out: &mut BTreeSet<String>) {
    match e {
        Expr::Var(x) => {
            if !bound.contains(&x.as_str()) {
                out.insert(x.clone());
            }
        }
        Expr::Let(x, e1, e2) => {
            collect_fv(e1, bound, out);
            bound.push(x);
            collect_fv(e2, bound, out);
            bound.pop();
        }
        _ => {
            for c in e.children() {
                collect_fv(c, bound, out);
            }
        }
    }
}

/// A desugared protocol: the agent count plus a closed core expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Protocol {
    pub agent_count: u32,
    pub expr: Expr,
}

/// Number of intervals each agent receives, read off the output type.
pub fn arity_of_output(output: &Ty, n_agents: u32) -> Result<Vec<usize>, ShapeError> {
    fn piece_arity(t: &Ty) -> Option<usize> {
        match t {
            Ty::Interval => Some(1),
            Ty::Tuple(ts) if ts.iter().all(|t| *t == Ty::Interval) => Some(ts.len()),
            _ => None,
        }
    }
    let bad = || ShapeError {
        ty: output.clone(),
        agents: n_agents,
    };
    if n_agents == 1 {
        return piece_arity(output).map(|k| vec![k]).ok_or_else(bad);
    }
    match output {
        Ty::Tuple(parts) if parts.len() == n_agents as usize => parts
            .iter()
            .map(piece_arity)
            .collect::<Option<Vec<_>>>()
            .ok_or_else(bad),
        _ => Err(bad()),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("type {ty} is not an allocation for {agents} agent(s)")]
pub struct ShapeError {
    pub ty: Ty,
    pub agents: u32,
}

/// Splits an allocation value into per-agent interval lists.
pub fn allocation_pieces(value: &Value, n_agents: u32) -> Option<Vec<Vec<Interval>>> {
    fn piece(v: &Value) -> Option<Vec<Interval>> {
        match v {
            Value::Interval(i) => Some(vec![i.clone()]),
            Value::Tuple(vs) => vs.iter().map(|v| v.as_interval().cloned()).collect(),
            _ => None,
        }
    }
    if n_agents == 1 {
        return piece(value).map(|p| vec![p]);
    }
    match value {
        Value::Tuple(parts) if parts.len() == n_agents as usize => parts.iter().map(piece).collect(),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(i: u32) -> AgentId {
        AgentId::new(i).unwrap()
    }

    #[test]
    fn fv_of_closed_and_open_terms() {
        assert!(fv(&Expr::Cake).is_empty());
        let bound = Expr::let_in(
            "x",
            Expr::mark(a(1), Expr::real(int(0)), Expr::real(rat(1, 2))),
            Expr::divide(Expr::Cake, Expr::var("x")),
        );
        assert!(fv(&bound).is_empty());
        let open = Expr::divide(Expr::var("I"), Expr::var("m"));
        assert_eq!(fv(&open), ["I", "m"].iter().map(|s| s.to_string()).collect());
    }

    #[test]
    fn fv_respects_shadowing_order() {
        // let x = x in x : the bound expression sees the outer x
        let e = Expr::let_in("x", Expr::var("x"), Expr::var("x"));
        assert_eq!(fv(&e).len(), 1);
    }

    #[test]
    fn interval_constructor_checks_bounds() {
        assert!(Interval::new(rat(1, 2), rat(1, 4)).is_none());
        assert!(Interval::new(int(0), int(2)).is_none());
        assert!(Interval::new(rat(1, 3), rat(1, 3)).unwrap().is_degenerate());
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("1/2"), Some(rat(1, 2)));
        assert_eq!(parse_rational("0.25"), Some(rat(1, 4)));
        assert_eq!(parse_rational("3"), Some(int(3)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("x"), None);
    }

    #[test]
    fn allocation_arity() {
        let pair = Ty::Tuple(vec![Ty::Interval, Ty::Interval]);
        assert_eq!(arity_of_output(&pair, 2).unwrap(), vec![1, 1]);
        let sc = Ty::Tuple(vec![pair.clone(), pair.clone(), pair.clone()]);
        assert_eq!(arity_of_output(&sc, 3).unwrap(), vec![2, 2, 2]);
        assert_eq!(arity_of_output(&Ty::Interval, 1).unwrap(), vec![1]);
        assert!(arity_of_output(&Ty::Interval, 2).is_err());
        assert!(arity_of_output(&Ty::Tuple(vec![Ty::Real, Ty::Interval]), 2).is_err());
    }

    #[test]
    fn subtyping_and_join() {
        assert!(Ty::Pos.is_subtype_of(&Ty::Real));
        assert!(!Ty::Real.is_subtype_of(&Ty::Pos));
        assert_eq!(Ty::Pos.join(&Ty::Nat), Some(Ty::Real));
        assert_eq!(Ty::Interval.join(&Ty::Bool), None);
    }

    #[test]
    fn operators_are_total_on_their_domain() {
        let half = Value::Real(rat(1, 2));
        assert_eq!(
            Op::DivBy(int(3)).apply(std::slice::from_ref(&half)),
            Some(Value::Real(rat(1, 6)))
        );
        assert_eq!(Op::Ge.apply(&[half.clone(), Value::Nat(0)]), Some(Value::Bool(true)));
        assert_eq!(
            Op::Eq.apply(&[Value::Nat(1), Value::Real(int(1))]),
            Some(Value::Bool(true))
        );
    }
}
