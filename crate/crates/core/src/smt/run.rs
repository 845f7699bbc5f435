use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Duration;

use num_traits::Zero;
use wait_timeout::ChildExt;

use super::{SolverConfig, SolverKind, Verdict};
use crate::ast::{parse_rational, Rational};

/// Looks for the solver binary in `SLICE_SOLVER_PATH` first, then `PATH`.
pub fn find_solver(kind: SolverKind) -> Option<PathBuf> {
    let name = kind.binary();
    let mut dirs: Vec<PathBuf> = Vec::new();
    for var in ["SLICE_SOLVER_PATH", "PATH"] {
        if let Some(v) = std::env::var_os(var) {
            dirs.extend(std::env::split_paths(&v));
        }
    }
    dirs.into_iter().map(|d| d.join(name)).find(|p| p.is_file())
}

/// Runs the configured solver on `script`.
pub fn run(script: &str, cfg: &SolverConfig) -> Verdict {
    match find_solver(cfg.solver) {
        Some(bin) => run_with_binary(&bin, script, cfg),
        None => Verdict::SolverError(format!("{} not found on SLICE_SOLVER_PATH or PATH", cfg.solver)),
    }
}

fn args(kind: SolverKind, timeout: Duration, file: &Path) -> Vec<String> {
    let file = file.display().to_string();
    match kind {
        SolverKind::Z3 => vec!["-smt2".into(), format!("-T:{}", timeout.as_secs().max(1)), file],
        SolverKind::Cvc5 => vec![
            "--lang".into(),
            "smt2".into(),
            format!("--tlimit={}", timeout.as_millis().max(1)),
            file,
        ],
    }
}

pub fn run_with_binary(bin: &Path, script: &str, cfg: &SolverConfig) -> Verdict {
    let mut file = match tempfile::Builder::new().prefix("slice-").suffix(".smt2").tempfile() {
        Ok(f) => f,
        Err(e) => return Verdict::SolverError(format!("temporary file: {e}")),
    };
    if let Err(e) = file.write_all(script.as_bytes()).and_then(|_| file.flush()) {
        return Verdict::SolverError(format!("temporary file: {e}"));
    }
    let mut child = match Command::new(bin)
        .args(args(cfg.solver, cfg.timeout, file.path()))
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
    {
        Ok(c) => c,
        Err(e) => return Verdict::SolverError(format!("cannot start {}: {e}", bin.display())),
    };
    let mut stdout = child.stdout.take().expect("piped");
    let mut stderr = child.stderr.take().expect("piped");
    let out_reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        s
    });
    let err_reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stderr.read_to_string(&mut s);
        s
    });
    // the solver's own limit fires first; this is the backstop
    let deadline = cfg.timeout + Duration::from_secs(5);
    let status = match child.wait_timeout(deadline) {
        Ok(Some(status)) => Some(status),
        Ok(None) => {
            let _ = child.kill();
            let _ = child.wait();
            None
        }
        Err(e) => return Verdict::SolverError(format!("waiting for solver: {e}")),
    };
    let out = out_reader.join().unwrap_or_default();
    let err = err_reader.join().unwrap_or_default();
    match status {
        None => Verdict::Timeout,
        Some(status) => parse_output(&out, &err, status.success()),
    }
}

fn parse_output(out: &str, err: &str, ok: bool) -> Verdict {
    let mut lines = out.lines().map(str::trim).filter(|l| !l.is_empty());
    match lines.next() {
        Some("unsat") => Verdict::Unsat,
        Some("sat") => Verdict::Sat(lines.collect::<Vec<_>>().join("\n")),
        Some("unknown") => {
            let reason = out
                .lines()
                .find_map(|l| l.trim().strip_prefix("(:reason-unknown"))
                .map(|r| r.trim_end_matches(')').trim().trim_matches('"').to_string())
                .unwrap_or_default();
            Verdict::Unknown(reason)
        }
        Some("timeout") => Verdict::Timeout,
        Some(other) => {
            let detail = if err.trim().is_empty() { other } else { err.trim() };
            Verdict::SolverError(detail.to_string())
        }
        None if !ok => Verdict::SolverError(err.trim().to_string()),
        None => Verdict::SolverError("no output".to_string()),
    }
}

/// Constant assignments from a solver model.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Model {
    pub values: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '(' | ')' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(c.to_string());
            }
            '|' => {
                cur.push(c);
                for d in chars.by_ref() {
                    cur.push(d);
                    if d == '|' {
                        break;
                    }
                }
            }
            ';' => {
                for d in chars.by_ref() {
                    if d == '\n' {
                        break;
                    }
                }
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn parse_sexps(tokens: &[String]) -> Vec<Sexp> {
    fn one(tokens: &[String], i: &mut usize) -> Option<Sexp> {
        let t = tokens.get(*i)?;
        *i += 1;
        if t == "(" {
            let mut items = Vec::new();
            while *i < tokens.len() && tokens[*i] != ")" {
                items.push(one(tokens, i)?);
            }
            *i += 1;
            Some(Sexp::List(items))
        } else {
            Some(Sexp::Atom(t.clone()))
        }
    }
    let mut i = 0;
    let mut out = Vec::new();
    while i < tokens.len() {
        match one(tokens, &mut i) {
            Some(s) => out.push(s),
            None => break,
        }
    }
    out
}

fn render(s: &Sexp) -> String {
    match s {
        Sexp::Atom(a) => a.clone(),
        Sexp::List(items) => format!("({})", items.iter().map(render).collect::<Vec<_>>().join(" ")),
    }
}

fn rational_of(s: &Sexp) -> Option<Rational> {
    match s {
        Sexp::Atom(a) => parse_rational(a),
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(op), x] if op == "-" => rational_of(x).map(|r| -r),
            [Sexp::Atom(op), x, y] if op == "/" => {
                let d = rational_of(y)?;
                if d.is_zero() {
                    None
                } else {
                    Some(rational_of(x)? / d)
                }
            }
            _ => None,
        },
    }
}

impl Model {
    /// Reads the nullary `define-fun`s of a model printout.
    pub fn parse(text: &str) -> Model {
        let mut values = BTreeMap::new();
        let mut stack = parse_sexps(&tokenize(text));
        while let Some(s) = stack.pop() {
            let Sexp::List(items) = s else { continue };
            match items.as_slice() {
                [Sexp::Atom(d), Sexp::Atom(name), Sexp::List(params), _sort, body]
                    if d == "define-fun" && params.is_empty() =>
                {
                    values.insert(name.clone(), render(body));
                }
                _ => stack.extend(items),
            }
        }
        Model { values }
    }

    pub fn rational(&self, name: &str) -> Option<Rational> {
        let text = self.values.get(name)?;
        parse_sexps(&tokenize(text)).first().and_then(rational_of)
    }
}
