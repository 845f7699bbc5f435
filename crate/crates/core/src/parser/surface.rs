//! Surface syntax tree and its pretty-printer.

use std::fmt::{self, Write as _};

use crate::ast::{fmt_rational, AgentId, Op, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Agent subscript of a query: a literal agent or a `def` agent parameter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AgentRef {
    Id(AgentId),
    Param(String),
}

impl fmt::Display for AgentRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentRef::Id(a) => write!(f, "{a}"),
            AgentRef::Param(p) => write!(f, "{p}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pattern {
    Var(String),
    Tuple(Vec<Pattern>),
}

impl Pattern {
    pub fn binders(&self) -> Vec<&str> {
        match self {
            Pattern::Var(x) => vec![x.as_str()],
            Pattern::Tuple(ps) => ps.iter().flat_map(Pattern::binders).collect(),
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Var(x) => write!(f, "{x}"),
            Pattern::Tuple(ps) => {
                write!(f, "(")?;
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SExpr {
    pub kind: SKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SKind {
    Num(Rational),
    Bool(bool),
    IntervalLit(Rational, Rational),
    Var(String),
    Op(Op, Vec<SExpr>),
    Let(Pattern, Box<SExpr>, Box<SExpr>),
    If(Box<SExpr>, Box<SExpr>, Box<SExpr>),
    Tuple(Vec<SExpr>),
    Piece(Box<SExpr>, usize),
    Cake,
    Left(Box<SExpr>),
    Right(Box<SExpr>),
    Divide(Box<SExpr>, Box<SExpr>),
    Mark(AgentRef, Box<SExpr>, Box<SExpr>),
    Eval(AgentRef, Box<SExpr>),
    Sort(AgentRef, Vec<SExpr>),
    Alloc(Vec<SExpr>),
    Call(String, Vec<SExpr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Param {
    Agent(String),
    Value(String),
}

impl Param {
    pub fn name(&self) -> &str {
        match self {
            Param::Agent(n) | Param::Value(n) => n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Def {
    pub name: String,
    pub params: Vec<Param>,
    pub body: SExpr,
    pub pos: Pos,
}

/// A parsed protocol file: agent count, abbreviations, and the main expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub agent_count: u32,
    pub defs: Vec<Def>,
    pub main: SExpr,
}

impl Program {
    pub fn def(&self, name: &str) -> Option<&Def> {
        self.defs.iter().find(|d| d.name == name)
    }

    /// Renders the program back to concrete syntax.
    pub fn to_source(&self) -> String {
        let mut out = format!("agents {}\n", self.agent_count);
        for def in &self.defs {
            let params = def
                .params
                .iter()
                .map(|p| match p {
                    Param::Agent(n) => format!("agent {n}"),
                    Param::Value(n) => n.clone(),
                })
                .collect::<Vec<_>>()
                .join(", ");
            let _ = write!(out, "\ndef {}({}) =\n", def.name, params);
            print_block(&def.body, 1, &mut out);
            out.push_str(";\n");
        }
        out.push('\n');
        print_block(&self.main, 0, &mut out);
        out.push('\n');
        out
    }
}

// Binding strength used to decide where parentheses are needed.
const PREC_OR: u8 = 1;
const PREC_AND: u8 = 2;
const PREC_NOT: u8 = 3;
const PREC_CMP: u8 = 4;
const PREC_ADD: u8 = 5;
const PREC_MUL: u8 = 6;
const PREC_UNARY: u8 = 7;
const PREC_ATOM: u8 = 8;

fn prec(e: &SExpr) -> u8 {
    match &e.kind {
        SKind::Let(..) | SKind::If(..) => 0,
        SKind::Op(op, _) => match op {
            Op::Or => PREC_OR,
            Op::And => PREC_AND,
            Op::Not => PREC_NOT,
            Op::Eq | Op::Ne | Op::Le | Op::Ge | Op::Lt | Op::Gt => PREC_CMP,
            Op::Add | Op::Sub => PREC_ADD,
            Op::Mul | Op::DivBy(_) => PREC_MUL,
        },
        SKind::Num(r) if !r.is_integer() => PREC_MUL,
        SKind::Left(_) | SKind::Right(_) => PREC_UNARY,
        _ => PREC_ATOM,
    }
}

fn indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

/// Prints let-chains and conditionals one construct per line.
fn print_block(e: &SExpr, level: usize, out: &mut String) {
    match &e.kind {
        SKind::Let(p, bound, body) => {
            indent(level, out);
            let _ = write!(out, "let {p} =");
            if matches!(bound.kind, SKind::Let(..) | SKind::If(..)) {
                out.push('\n');
                print_block(bound, level + 1, out);
                out.push('\n');
                indent(level, out);
                out.push_str("in\n");
            } else {
                let _ = writeln!(out, " {} in", inline(bound));
            }
            print_block(body, level, out);
        }
        SKind::If(c, t, f) => {
            indent(level, out);
            let _ = writeln!(out, "if {} then", inline(c));
            print_block(t, level + 1, out);
            out.push('\n');
            indent(level, out);
            out.push_str("else\n");
            print_block(f, level + 1, out);
        }
        _ => {
            indent(level, out);
            out.push_str(&inline(e));
        }
    }
}

/// Single-line rendering.
pub fn inline(e: &SExpr) -> String {
    let mut s = String::new();
    write_inline(e, &mut s);
    s
}

fn write_operand(e: &SExpr, min: u8, out: &mut String) {
    if prec(e) < min {
        out.push('(');
        write_inline(e, out);
        out.push(')');
    } else {
        write_inline(e, out);
    }
}

fn write_list(items: &[SExpr], out: &mut String) {
    for (i, a) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_inline(a, out);
    }
}

fn write_inline(e: &SExpr, out: &mut String) {
    match &e.kind {
        SKind::Num(r) => out.push_str(&fmt_rational(r)),
        SKind::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        SKind::IntervalLit(lo, hi) => {
            let _ = write!(out, "[{}, {}]", fmt_rational(lo), fmt_rational(hi));
        }
        SKind::Var(x) => out.push_str(x),
        SKind::Op(op, args) => {
            let p = prec(e);
            match op {
                Op::Not => {
                    out.push('!');
                    write_operand(&args[0], PREC_NOT, out);
                }
                Op::DivBy(c) => {
                    write_operand(&args[0], PREC_MUL, out);
                    if c.is_integer() {
                        let _ = write!(out, " / {}", fmt_rational(c));
                    } else {
                        let _ = write!(out, " / ({})", fmt_rational(c));
                    }
                }
                _ => {
                    // left-associative except comparisons, which do not chain
                    let right_min = p + 1;
                    let left_min = if p == PREC_CMP { p + 1 } else { p };
                    write_operand(&args[0], left_min, out);
                    let _ = write!(out, " {} ", op.symbol());
                    write_operand(&args[1], right_min, out);
                }
            }
        }
        SKind::Let(p, bound, body) => {
            let _ = write!(out, "let {p} = ");
            write_inline(bound, out);
            out.push_str(" in ");
            write_inline(body, out);
        }
        SKind::If(c, t, f) => {
            out.push_str("if ");
            write_inline(c, out);
            out.push_str(" then ");
            write_inline(t, out);
            out.push_str(" else ");
            write_inline(f, out);
        }
        SKind::Tuple(items) => {
            out.push('(');
            write_list(items, out);
            out.push(')');
        }
        SKind::Piece(e, k) => {
            out.push_str("piece(");
            write_inline(e, out);
            let _ = write!(out, ", {k})");
        }
        SKind::Cake => out.push_str("cake"),
        SKind::Left(e) => {
            out.push_str("left ");
            write_operand(e, PREC_UNARY, out);
        }
        SKind::Right(e) => {
            out.push_str("right ");
            write_operand(e, PREC_UNARY, out);
        }
        SKind::Divide(a, b) => {
            out.push_str("divide(");
            write_list(&[(**a).clone(), (**b).clone()], out);
            out.push(')');
        }
        SKind::Mark(a, l, t) => {
            let _ = write!(out, "mark_{a}(");
            write_list(&[(**l).clone(), (**t).clone()], out);
            out.push(')');
        }
        SKind::Eval(a, p) => {
            let _ = write!(out, "eval_{a}(");
            write_inline(p, out);
            out.push(')');
        }
        SKind::Sort(a, items) => {
            let _ = write!(out, "sort_{a}(");
            write_list(items, out);
            out.push(')');
        }
        SKind::Alloc(items) => {
            out.push_str("alloc(");
            write_list(items, out);
            out.push(')');
        }
        SKind::Call(name, args) => {
            let _ = write!(out, "{name}(");
            write_list(args, out);
            out.push(')');
        }
    }
}
