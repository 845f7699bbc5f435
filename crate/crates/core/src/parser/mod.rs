//! Concrete syntax: lexing, parsing with scope checks, and desugaring to core.

mod desugar;
mod lexer;
pub mod surface;

use std::collections::HashSet;
use std::fmt;

pub use desugar::desugar;
pub use surface::{AgentRef, Def, Param, Pattern, Pos, Program, SExpr, SKind};

use crate::ast::{parse_rational, AgentId, Op, Protocol, Rational};
use lexer::Tok;
use num_traits::Zero;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownIdentifier(String),
    Arity {
        what: String,
        expected: usize,
        found: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    fn at(pos: Pos, kind: ParseErrorKind) -> Self {
        ParseError {
            line: pos.line,
            col: pos.col,
            kind,
        }
    }

    pub(crate) fn syntax(pos: Pos, msg: impl Into<String>) -> Self {
        Self::at(pos, ParseErrorKind::Syntax(msg.into()))
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: ", self.line, self.col)?;
        match &self.kind {
            ParseErrorKind::Syntax(m) => write!(f, "syntax error: {m}"),
            ParseErrorKind::UnknownIdentifier(x) => write!(f, "unknown identifier `{x}`"),
            ParseErrorKind::Arity { what, expected, found } => {
                write!(f, "arity mismatch in {what}: expected {expected}, found {found}")
            }
        }
    }
}

/// Parses a protocol file.
///
/// ```text
/// agents 2
/// let m = mark_1(0, 1/2) in
/// let (I1, I2) = divide(cake, m) in
/// let (A, B) = sort_2(I1, I2) in
/// alloc(B, A)
/// ```
pub fn parse(text: &str) -> Result<Program, ParseError> {
    let toks = lexer::tokenize(text)?;
    let mut p = Parser {
        toks,
        at: 0,
        agent_count: 0,
        defs: Vec::new(),
        scope: Vec::new(),
        agent_params: Vec::new(),
    };
    p.program()
}

/// Parses and desugars in one step.
pub fn parse_protocol(text: &str) -> Result<Protocol, ParseError> {
    parse(text).map(|p| desugar(&p))
}

const KEYWORDS: &[&str] = &[
    "agents", "agent", "def", "let", "in", "if", "then", "else", "alloc", "cake", "divide", "left", "right", "piece",
    "true", "false", "not", "and", "or",
];

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    agent_count: u32,
    defs: Vec<Def>,
    scope: Vec<String>,
    agent_params: Vec<String>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        Err(ParseError::syntax(
            self.pos(),
            format!("expected {wanted}, found {}", self.peek().describe()),
        ))
    }

    fn expect(&mut self, tok: Tok) -> PResult<Pos> {
        if *self.peek() == tok {
            Ok(self.bump().1)
        } else {
            let wanted = tok.describe();
            self.unexpected(&wanted)
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Pos> {
        if self.is_kw(kw) {
            Ok(self.bump().1)
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self) -> PResult<(String, Pos)> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let pos = self.bump().1;
                Ok((s, pos))
            }
            _ => self.unexpected("an identifier"),
        }
    }

    fn program(&mut self) -> PResult<Program> {
        self.expect_kw("agents")?;
        let pos = self.pos();
        let n = match self.bump().0 {
            Tok::Num(s) => s.parse::<u32>().ok().filter(|n| *n >= 1),
            _ => None,
        };
        self.agent_count = n.ok_or_else(|| ParseError::syntax(pos, "agent count must be a positive integer"))?;
        while self.is_kw("def") {
            let def = self.def()?;
            self.defs.push(def);
        }
        let main = self.expr()?;
        if *self.peek() != Tok::Eof {
            return self.unexpected("end of input");
        }
        Ok(Program {
            agent_count: self.agent_count,
            defs: std::mem::take(&mut self.defs),
            main,
        })
    }

    fn def(&mut self) -> PResult<Def> {
        let pos = self.expect_kw("def")?;
        let (name, name_pos) = self.ident()?;
        if self.defs.iter().any(|d| d.name == name) {
            return Err(ParseError::syntax(name_pos, format!("duplicate definition `{name}`")));
        }
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        let mut seen = HashSet::new();
        if *self.peek() != Tok::RParen {
            loop {
                let is_agent = self.eat_kw("agent");
                let (p, ppos) = self.ident()?;
                if !seen.insert(p.clone()) {
                    return Err(ParseError::syntax(ppos, format!("duplicate parameter `{p}`")));
                }
                params.push(if is_agent { Param::Agent(p) } else { Param::Value(p) });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::Assign)?;
        let outer_scope = std::mem::take(&mut self.scope);
        self.agent_params.clear();
        for p in &params {
            match p {
                Param::Agent(n) => self.agent_params.push(n.clone()),
                Param::Value(n) => self.scope.push(n.clone()),
            }
        }
        let body = self.expr();
        self.scope = outer_scope;
        self.agent_params.clear();
        let body = body?;
        self.expect(Tok::Semi)?;
        Ok(Def {
            name,
            params,
            body,
            pos,
        })
    }

    fn expr(&mut self) -> PResult<SExpr> {
        let pos = self.pos();
        if self.eat_kw("let") {
            let pat = self.pattern()?;
            self.expect(Tok::Assign)?;
            let bound = self.expr()?;
            self.expect_kw("in")?;
            let mark = self.scope.len();
            self.scope.extend(pat.binders().into_iter().map(String::from));
            let body = self.expr();
            self.scope.truncate(mark);
            return Ok(SExpr {
                kind: SKind::Let(pat, Box::new(bound), Box::new(body?)),
                pos,
            });
        }
        if self.eat_kw("if") {
            let c = self.expr()?;
            self.expect_kw("then")?;
            let t = self.expr()?;
            self.expect_kw("else")?;
            let f = self.expr()?;
            return Ok(SExpr {
                kind: SKind::If(Box::new(c), Box::new(t), Box::new(f)),
                pos,
            });
        }
        self.or_expr()
    }

    fn pattern(&mut self) -> PResult<Pattern> {
        if self.eat(&Tok::LParen) {
            let mut items = vec![self.pattern()?];
            while self.eat(&Tok::Comma) {
                items.push(self.pattern()?);
            }
            self.expect(Tok::RParen)?;
            if items.len() == 1 {
                return Ok(items.pop().unwrap());
            }
            let mut seen = HashSet::new();
            let pos = self.pos();
            let pat = Pattern::Tuple(items);
            for b in pat.binders() {
                if !seen.insert(b.to_string()) {
                    return Err(ParseError::syntax(pos, format!("`{b}` bound twice in pattern")));
                }
            }
            return Ok(pat);
        }
        Ok(Pattern::Var(self.ident()?.0))
    }

    fn binary(pos: Pos, op: Op, l: SExpr, r: SExpr) -> SExpr {
        SExpr {
            kind: SKind::Op(op, vec![l, r]),
            pos,
        }
    }

    fn or_expr(&mut self) -> PResult<SExpr> {
        let mut l = self.and_expr()?;
        loop {
            let pos = self.pos();
            if self.eat(&Tok::OrOr) || self.eat_kw("or") {
                let r = self.and_expr()?;
                l = Self::binary(pos, Op::Or, l, r);
            } else {
                return Ok(l);
            }
        }
    }

    fn and_expr(&mut self) -> PResult<SExpr> {
        let mut l = self.not_expr()?;
        loop {
            let pos = self.pos();
            if self.eat(&Tok::AndAnd) || self.eat_kw("and") {
                let r = self.not_expr()?;
                l = Self::binary(pos, Op::And, l, r);
            } else {
                return Ok(l);
            }
        }
    }

    fn not_expr(&mut self) -> PResult<SExpr> {
        let pos = self.pos();
        if self.eat(&Tok::Bang) || self.eat_kw("not") {
            let e = self.not_expr()?;
            return Ok(SExpr {
                kind: SKind::Op(Op::Not, vec![e]),
                pos,
            });
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> PResult<SExpr> {
        let l = self.add_expr()?;
        let pos = self.pos();
        let op = match self.peek() {
            Tok::Assign | Tok::EqEq => Op::Eq,
            Tok::Ne => Op::Ne,
            Tok::Le => Op::Le,
            Tok::Ge => Op::Ge,
            Tok::Lt => Op::Lt,
            Tok::Gt => Op::Gt,
            _ => return Ok(l),
        };
        self.bump();
        let r = self.add_expr()?;
        Ok(Self::binary(pos, op, l, r))
    }

    fn add_expr(&mut self) -> PResult<SExpr> {
        let mut l = self.mul_expr()?;
        loop {
            let pos = self.pos();
            let op = match self.peek() {
                Tok::Plus => Op::Add,
                Tok::Minus => Op::Sub,
                _ => return Ok(l),
            };
            self.bump();
            let r = self.mul_expr()?;
            l = Self::binary(pos, op, l, r);
        }
    }

    fn mul_expr(&mut self) -> PResult<SExpr> {
        let mut l = self.unary()?;
        loop {
            let pos = self.pos();
            if self.eat(&Tok::Star) {
                let r = self.unary()?;
                l = Self::binary(pos, Op::Mul, l, r);
            } else if self.eat(&Tok::Slash) {
                let rpos = self.pos();
                let r = self.unary()?;
                let c = match r.kind {
                    SKind::Num(c) if !c.is_zero() => c,
                    _ => {
                        return Err(ParseError::syntax(
                            rpos,
                            "division is only allowed by a non-zero numeric literal",
                        ))
                    }
                };
                l = match l.kind {
                    SKind::Num(a) => SExpr {
                        kind: SKind::Num(a / c),
                        pos: l.pos,
                    },
                    _ => SExpr {
                        kind: SKind::Op(Op::DivBy(c), vec![l]),
                        pos,
                    },
                };
            } else {
                return Ok(l);
            }
        }
    }

    fn unary(&mut self) -> PResult<SExpr> {
        let pos = self.pos();
        if self.eat_kw("left") {
            let e = self.unary()?;
            return Ok(SExpr {
                kind: SKind::Left(Box::new(e)),
                pos,
            });
        }
        if self.eat_kw("right") {
            let e = self.unary()?;
            return Ok(SExpr {
                kind: SKind::Right(Box::new(e)),
                pos,
            });
        }
        self.primary()
    }

    fn args(&mut self) -> PResult<Vec<SExpr>> {
        self.expect(Tok::LParen)?;
        let mut out = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                out.push(self.expr()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        Ok(out)
    }

    fn fixed_args(&mut self, what: &str, pos: Pos, n: usize) -> PResult<Vec<SExpr>> {
        let args = self.args()?;
        if args.len() != n {
            return Err(ParseError::at(
                pos,
                ParseErrorKind::Arity {
                    what: what.to_string(),
                    expected: n,
                    found: args.len(),
                },
            ));
        }
        Ok(args)
    }

    fn literal(&mut self) -> PResult<Rational> {
        let pos = self.pos();
        let e = self.add_expr()?;
        match e.kind {
            SKind::Num(r) => Ok(r),
            _ => Err(ParseError::syntax(pos, "interval endpoints must be numeric literals")),
        }
    }

    fn agent_ref(&self, sub: &str, pos: Pos) -> PResult<AgentRef> {
        if let Ok(i) = sub.parse::<u32>() {
            return match AgentId::new(i).filter(|a| a.is_valid_for(self.agent_count)) {
                Some(a) => Ok(AgentRef::Id(a)),
                None => Err(ParseError::syntax(
                    pos,
                    format!("agent {i} out of range 1..={}", self.agent_count),
                )),
            };
        }
        if self.agent_params.iter().any(|p| p == sub) {
            Ok(AgentRef::Param(sub.to_string()))
        } else {
            Err(ParseError::at(pos, ParseErrorKind::UnknownIdentifier(sub.to_string())))
        }
    }

    fn primary(&mut self) -> PResult<SExpr> {
        if matches!(
            self.peek(),
            Tok::Eof | Tok::RParen | Tok::RBracket | Tok::Comma | Tok::Semi
        ) {
            return self.unexpected("an expression");
        }
        let (tok, pos) = self.bump();
        let node = |kind| Ok(SExpr { kind, pos });
        match tok {
            Tok::Num(s) => {
                let r = parse_rational(&s).ok_or_else(|| ParseError::syntax(pos, "bad number"))?;
                node(SKind::Num(r))
            }
            Tok::LParen => {
                let mut items = vec![self.expr()?];
                while self.eat(&Tok::Comma) {
                    items.push(self.expr()?);
                }
                self.expect(Tok::RParen)?;
                if items.len() == 1 {
                    Ok(items.pop().unwrap())
                } else {
                    node(SKind::Tuple(items))
                }
            }
            Tok::LBracket => {
                let lo = self.literal()?;
                self.expect(Tok::Comma)?;
                let hi = self.literal()?;
                self.expect(Tok::RBracket)?;
                if crate::ast::Interval::new(lo.clone(), hi.clone()).is_none() {
                    return Err(ParseError::syntax(
                        pos,
                        "interval literal must satisfy 0 <= lo <= hi <= 1",
                    ));
                }
                node(SKind::IntervalLit(lo, hi))
            }
            Tok::Ident(word) => self.word(word, pos),
            _ => {
                self.at -= 1;
                self.unexpected("an expression")
            }
        }
    }

    fn word(&mut self, word: String, pos: Pos) -> PResult<SExpr> {
        let node = |kind| Ok(SExpr { kind, pos });
        match word.as_str() {
            "true" => return node(SKind::Bool(true)),
            "false" => return node(SKind::Bool(false)),
            "cake" => return node(SKind::Cake),
            "let" | "if" => {
                self.at -= 1;
                return self.expr();
            }
            "divide" => {
                let mut a = self.fixed_args("divide", pos, 2)?;
                let at = a.pop().unwrap();
                let piece = a.pop().unwrap();
                return node(SKind::Divide(Box::new(piece), Box::new(at)));
            }
            "piece" => {
                self.expect(Tok::LParen)?;
                let e = self.expr()?;
                self.expect(Tok::Comma)?;
                let kpos = self.pos();
                let k = match self.bump().0 {
                    Tok::Num(s) => s.parse::<usize>().ok().filter(|k| *k >= 1),
                    _ => None,
                }
                .ok_or_else(|| ParseError::syntax(kpos, "projection index must be a positive integer"))?;
                self.expect(Tok::RParen)?;
                return node(SKind::Piece(Box::new(e), k));
            }
            "alloc" => {
                let n = self.agent_count as usize;
                let args = self.fixed_args("alloc", pos, n)?;
                return node(SKind::Alloc(args));
            }
            _ => {}
        }
        if KEYWORDS.contains(&word.as_str()) {
            self.at -= 1;
            return self.unexpected("an expression");
        }
        for (prefix, kind) in [("mark_", 0), ("eval_", 1), ("sort_", 2)] {
            if let Some(sub) = word.strip_prefix(prefix) {
                if *self.peek() != Tok::LParen {
                    break;
                }
                let agent = self.agent_ref(sub, pos)?;
                return match kind {
                    0 => {
                        let mut a = self.fixed_args("mark", pos, 2)?;
                        let target = a.pop().unwrap();
                        let from = a.pop().unwrap();
                        node(SKind::Mark(agent, Box::new(from), Box::new(target)))
                    }
                    1 => {
                        let mut a = self.fixed_args("eval", pos, 1)?;
                        node(SKind::Eval(agent, Box::new(a.pop().unwrap())))
                    }
                    _ => {
                        let args = self.args()?;
                        if args.is_empty() {
                            return Err(ParseError::syntax(pos, "sort needs at least one piece"));
                        }
                        node(SKind::Sort(agent, args))
                    }
                };
            }
        }
        if *self.peek() == Tok::LParen {
            return self.call(word, pos);
        }
        if self.scope.contains(&word) {
            node(SKind::Var(word))
        } else {
            Err(ParseError::at(pos, ParseErrorKind::UnknownIdentifier(word)))
        }
    }

    fn call(&mut self, name: String, pos: Pos) -> PResult<SExpr> {
        let params = match self.defs.iter().find(|d| d.name == name) {
            Some(d) => d.params.clone(),
            None => return Err(ParseError::at(pos, ParseErrorKind::UnknownIdentifier(name))),
        };
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                let expects_agent = matches!(params.get(args.len()), Some(Param::Agent(_)));
                args.push(if expects_agent { self.agent_arg()? } else { self.expr()? });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        if args.len() != params.len() {
            return Err(ParseError::at(
                pos,
                ParseErrorKind::Arity {
                    what: format!("call to `{name}`"),
                    expected: params.len(),
                    found: args.len(),
                },
            ));
        }
        Ok(SExpr {
            kind: SKind::Call(name, args),
            pos,
        })
    }

    /// An agent argument: a literal agent number or an enclosing agent parameter.
    fn agent_arg(&mut self) -> PResult<SExpr> {
        let sub = match self.peek() {
            Tok::Num(s) | Tok::Ident(s) => s.clone(),
            _ => return self.unexpected("an agent"),
        };
        let pos = self.bump().1;
        let kind = match self.agent_ref(&sub, pos)? {
            AgentRef::Id(a) => SKind::Num(Rational::from_integer(a.index().into())),
            AgentRef::Param(p) => SKind::Var(p),
        };
        Ok(SExpr { kind, pos })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_protocol_parses() {
        let p = parse("agents 2\nlet (A,B) = divide(cake, mark_1(0, 1/2)) in alloc(B, A)").unwrap();
        assert_eq!(p.agent_count, 2);
        assert!(p.defs.is_empty());
    }

    #[test]
    fn alloc_arity_is_checked() {
        let err = parse("agents 2\nalloc(cake)").unwrap_err();
        assert!(matches!(
            err.kind,
            ParseErrorKind::Arity {
                expected: 2,
                found: 1,
                ..
            }
        ));
        assert_eq!((err.line, err.col), (2, 1));
    }

    #[test]
    fn unknown_identifiers() {
        let err = parse("agents 1\nleft X").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("X".into()));
        let err = parse("agents 1\nfoo(cake)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("foo".into()));
        let err = parse("agents 1\neval_P(cake)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("P".into()));
    }

    #[test]
    fn agent_out_of_range() {
        assert!(parse("agents 2\neval_3(cake)").is_err());
        assert!(parse("agents 2\neval_0(cake)").is_err());
    }

    #[test]
    fn def_call_arity() {
        let src = "agents 1\ndef f(X) = X;\nf(cake, cake)";
        let err = parse(src).unwrap_err();
        assert!(matches!(
            err.kind,
            ParseErrorKind::Arity {
                expected: 1,
                found: 2,
                ..
            }
        ));
    }

    #[test]
    fn division_folds_literals() {
        let p = parse("agents 1\nlet v = eval_1(cake) in if v * 2/3 >= 1/3 then cake else cake").unwrap();
        let SKind::Let(_, _, body) = &p.main.kind else { panic!() };
        let SKind::If(c, _, _) = &body.kind else { panic!() };
        let SKind::Op(Op::Ge, args) = &c.kind else { panic!() };
        assert!(matches!(&args[1].kind, SKind::Num(r) if *r == crate::ast::rat(1, 3)));
        assert!(parse("agents 1\nlet v = eval_1(cake) in v / v").is_err());
    }

    #[test]
    fn syntax_error_position() {
        let err = parse("agents 1\nlet x = in cake").unwrap_err();
        assert_eq!((err.line, err.col), (2, 9));
    }
}
